import cmath

import numpy as np
import pytest

from eigenkae.data import (Dataset, PendulumParams, Trajectory, gen_linear_dataset,
                           inverse_standardize, load_dataset, save_dataset,
                           simulate_pendulum, standardize_split,
                           windows_from_dataset)
from eigenkae.errors import FormatError, ParameterError
from eigenkae.linalg import eigvals


def pendulum_free(dt, steps, x0=1.0):
    # f0 = 0: plain harmonic oscillator with known solution x(t) = cos(w0 t);
    # degenerate uniform ranges pin the initial condition
    params = PendulumParams(f0=0.0, dt=dt, steps=steps,
                            x_range=(x0, x0), v_range=(0.0, 0.0))
    return simulate_pendulum(params, 1, np.random.default_rng(0))


class TestPendulum:
    def test_matches_analytic_harmonic_solution(self):
        omega0 = 3.13
        dt = 1e-3
        periods = 10
        steps = int(round(periods * 2 * np.pi / omega0 / dt)) + 1
        ds = pendulum_free(dt, steps)
        t = np.arange(steps) * dt
        x = ds.trajectories[0].states[:, 0]
        assert np.max(np.abs(x - np.cos(omega0 * t))) <= 1e-6

    def test_fourth_order_convergence(self):
        omega0 = 3.13
        period = 2 * np.pi / omega0

        def max_err(dt):
            steps = int(round(2 * period / dt)) + 1
            ds = pendulum_free(dt, steps)
            t = np.arange(steps) * dt
            return np.max(np.abs(ds.trajectories[0].states[:, 0] - np.cos(omega0 * t)))

        ratio = max_err(2e-3) / max_err(1e-3)
        assert 12.0 <= ratio <= 20.0

    def test_seed_determinism(self):
        params = PendulumParams(steps=50)
        a = simulate_pendulum(params, 5, np.random.default_rng(7))
        b = simulate_pendulum(params, 5, np.random.default_rng(7))
        for ta, tb in zip(a.trajectories, b.trajectories):
            assert np.array_equal(ta.states, tb.states)

    def test_initial_conditions_in_range(self):
        params = PendulumParams(steps=2)
        ds = simulate_pendulum(params, 200, np.random.default_rng(1))
        first = np.stack([t.states[0] for t in ds.trajectories])
        assert np.all((first[:, 0] >= -np.pi) & (first[:, 0] <= np.pi))
        assert np.all((first[:, 1] >= -1.0) & (first[:, 1] <= 1.0))

    def test_param_validation(self):
        with pytest.raises(ParameterError):
            PendulumParams(dt=0.0)
        with pytest.raises(ParameterError):
            PendulumParams(steps=1)


class TestLinearGenerator:
    def test_orthogonal_case_preserves_norm(self):
        spectrum = [cmath.exp(0.5j), cmath.exp(-0.5j)]
        ds, a = gen_linear_dataset(spectrum, 2, 4, 30, np.random.default_rng(0))
        assert np.allclose(a @ a.T, np.eye(2), atol=1e-12)
        for traj in ds.trajectories:
            norms = np.linalg.norm(traj.states, axis=1)
            assert np.max(np.abs(norms - norms[0])) <= 1e-10

    def test_scalar_contraction(self):
        ds, _ = gen_linear_dataset([0.5], 1, 1, 10, np.random.default_rng(1))
        states = ds.trajectories[0].states[:, 0]
        assert np.allclose(np.abs(states), 0.5 ** np.arange(10) * abs(states[0]))

    def test_spectrum_roundtrip(self):
        spectrum = [cmath.exp(0.3j), cmath.exp(-0.3j), 0.9, 0.7]
        _, a = gen_linear_dataset(spectrum, 4, 1, 5, np.random.default_rng(2))
        got = np.sort_complex(eigvals(a))
        expected = np.sort_complex(np.array(spectrum))
        assert np.max(np.abs(got - expected)) <= 1e-9

    def test_conjugate_closure_required(self):
        with pytest.raises(ParameterError):
            gen_linear_dataset([0.5 + 0.5j, 0.9], 2, 1, 5, np.random.default_rng(0))

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            gen_linear_dataset([1.0], 2, 1, 5, np.random.default_rng(0))


class TestStandardizeSplit:
    def make(self, n_traj=10, dim=3, steps=20, constant_feature=False):
        rng = np.random.default_rng(0)
        trajs = []
        for _ in range(n_traj):
            states = rng.normal(2.0, 3.0, size=(steps, dim))
            if constant_feature:
                states[:, -1] = 0.0
            trajs.append(Trajectory(states, 0.1, {}))
        return Dataset(trajs)

    def test_split_disjoint_exhaustive(self):
        ds = standardize_split(self.make(), (0.7, 0.15, 0.15))
        counts = [len(ds.indices(s)) for s in ("train", "val", "test")]
        assert sum(counts) == 10
        assert min(counts) >= 1

    def test_train_statistics_normalised(self):
        ds = standardize_split(self.make(), (0.7, 0.15, 0.15))
        train = np.concatenate([ds.trajectories[i].states for i in ds.indices("train")])
        assert np.max(np.abs(train.mean(axis=0))) <= 1e-10
        assert np.max(np.abs(train.std(axis=0) - 1.0)) <= 1e-10

    def test_constant_feature_left_unscaled(self):
        ds = standardize_split(self.make(constant_feature=True), (0.7, 0.15, 0.15))
        assert ds.constant_mask[-1]
        for traj in ds.trajectories:
            assert np.all(traj.states[:, -1] == 0.0)

    def test_roundtrip_inverse(self):
        raw = self.make()
        ds = standardize_split(raw, (0.7, 0.15, 0.15))
        back = inverse_standardize(ds)
        for a, b in zip(back.trajectories, raw.trajectories):
            assert np.max(np.abs(a.states - b.states)) <= 1e-12

    def test_too_few_trajectories(self):
        with pytest.raises(ParameterError):
            standardize_split(self.make(n_traj=2), (0.7, 0.15, 0.15))

    def test_bad_fractions(self):
        with pytest.raises(ParameterError):
            standardize_split(self.make(), (0.5, 0.2, 0.2))


class TestWindows:
    def test_no_cross_trajectory_windows(self):
        ds, _ = gen_linear_dataset([0.9], 1, 3, 10, np.random.default_rng(0))
        w = windows_from_dataset(ds, "train", 4)
        assert w.shape == (3 * (10 - 4 + 1), 4, 1)

    def test_window_content(self):
        ds, _ = gen_linear_dataset([0.9], 1, 1, 6, np.random.default_rng(0))
        w = windows_from_dataset(ds, "train", 3)
        states = ds.trajectories[0].states
        assert np.array_equal(w[0], states[0:3])
        assert np.array_equal(w[-1], states[3:6])


class TestDatasetIO:
    def make(self):
        params = PendulumParams(steps=30)
        ds = simulate_pendulum(params, 6, np.random.default_rng(3))
        return standardize_split(ds, (0.5, 0.25, 0.25))

    def test_roundtrip_bit_exact(self, tmp_path):
        ds = self.make()
        path = tmp_path / "data.kds1"
        save_dataset(path, ds)
        back = load_dataset(path)
        assert back.n_trajectories == ds.n_trajectories
        assert back.dt == ds.dt
        assert back.standardized == ds.standardized
        assert np.array_equal(back.splits, ds.splits)
        assert np.array_equal(back.mean, ds.mean)
        assert np.array_equal(back.std, ds.std)
        assert np.array_equal(back.constant_mask, ds.constant_mask)
        assert back.metadata == ds.metadata
        for a, b in zip(back.trajectories, ds.trajectories):
            assert np.array_equal(a.states, b.states)
            assert a.metadata == b.metadata

    def test_bad_magic_names_expected(self, tmp_path):
        path = tmp_path / "bad.kds1"
        path.write_bytes(b"XXXX" + b"\x00" * 40)
        with pytest.raises(FormatError) as err:
            load_dataset(path)
        assert "KDS1" in str(err.value)

    def test_truncation_reports_offset(self, tmp_path):
        ds = self.make()
        path = tmp_path / "data.kds1"
        save_dataset(path, ds)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(FormatError) as err:
            load_dataset(path)
        assert err.value.offset is not None

    def test_trailing_garbage_rejected(self, tmp_path):
        ds = self.make()
        path = tmp_path / "data.kds1"
        save_dataset(path, ds)
        path.write_bytes(path.read_bytes() + b"\x01")
        with pytest.raises(FormatError):
            load_dataset(path)
