import cmath

import numpy as np
import pytest

from eigenkae.data import gen_linear_dataset
from eigenkae.dmd import (dataset_snapshot_pairs, dmd_from_pairs, estimate_theta,
                          exact_dmd)
from eigenkae.errors import DimensionError, ParameterError, RankDeficiencyError
from eigenkae.linalg import eigvals


def snapshots_from(a, x0, steps):
    out = [np.asarray(x0, dtype=float)]
    for _ in range(steps - 1):
        out.append(a @ out[-1])
    return np.stack(out)


class TestExactDMD:
    def test_scalar_decay(self):
        snaps = snapshots_from(np.array([[0.5]]), [1.0], 10)
        result = exact_dmd(snaps, rank=1)
        assert result.operator == pytest.approx(np.array([[0.5]]))
        assert result.eigenvalues[0] == pytest.approx(0.5)

    def test_planar_rotation(self):
        phi = 0.37
        rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        snaps = snapshots_from(rot, [1.0, 0.2], 50)
        result = exact_dmd(snaps, rank=2)
        assert np.allclose(np.abs(result.eigenvalues), 1.0, atol=1e-10)
        assert np.allclose(sorted(np.angle(result.eigenvalues)), [-phi, phi], atol=1e-10)

    def test_diagonal_dynamics(self):
        a = np.diag([1.0, 0.8])
        snaps = snapshots_from(a, [0.7, 1.3], 40)
        result = exact_dmd(snaps, rank=2)
        got = sorted(result.eigenvalues, key=lambda z: -abs(z))
        assert abs(got[0] - 1.0) <= 1e-8
        assert abs(got[1] - 0.8) <= 1e-8

    def test_recovers_generator_spectrum(self):
        spectrum = [cmath.exp(0.3j), cmath.exp(-0.3j), 0.9, 0.7]
        ds, a = gen_linear_dataset(spectrum, 4, 3, 80, np.random.default_rng(0))
        x, y = dataset_snapshot_pairs(ds)
        result = dmd_from_pairs(x, y, rank=4)
        expected = np.sort_complex(eigvals(a))
        got = np.sort_complex(result.eigenvalues)
        assert np.max(np.abs(expected - got)) <= 1e-8

    def test_rank_deficiency_error(self):
        # rank-1 data cannot support a rank-2 fit
        snaps = np.outer(0.5 ** np.arange(20), np.array([1.0, 2.0]))
        with pytest.raises(RankDeficiencyError):
            exact_dmd(snaps, rank=2)

    def test_too_few_snapshots(self):
        with pytest.raises(DimensionError):
            exact_dmd(np.ones((1, 3)))

    def test_rank_out_of_range(self):
        snaps = snapshots_from(np.eye(2), [1.0, 1.0], 5)
        with pytest.raises(DimensionError):
            exact_dmd(snaps, rank=3)


class TestEstimateTheta:
    def test_orthogonal_generator_gives_zero(self):
        rng = np.random.default_rng(1)
        q, r = np.linalg.qr(rng.normal(size=(4, 4)))
        q = q * np.sign(np.diag(r))
        snaps = snapshots_from(q, rng.normal(size=4), 60)
        result = exact_dmd(snaps, rank=4)
        assert estimate_theta(result.eigenvalues) == 0.0

    def test_pure_contraction_gives_one(self):
        assert estimate_theta(np.array([0.5, 0.5, 0.5])) == 1.0

    def test_half_and_half(self):
        assert estimate_theta(np.array([1.0, 1.0, 0.5, 0.2])) == pytest.approx(0.5)

    def test_tolerance_window(self):
        lam = np.array([1.0 + 5e-4, 0.5])
        assert estimate_theta(lam, tol=1e-3) == pytest.approx(0.5)
        assert estimate_theta(lam, tol=1e-5) == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            estimate_theta(np.array([]))
        with pytest.raises(ParameterError):
            estimate_theta(np.array([1.0]), tol=0.0)

    def test_invariant_under_orthogonal_basis_change(self):
        spectrum = [cmath.exp(0.4j), cmath.exp(-0.4j), 0.6, 0.3]
        ds, a = gen_linear_dataset(spectrum, 4, 2, 60, np.random.default_rng(3))
        x, y = dataset_snapshot_pairs(ds)
        theta0 = estimate_theta(dmd_from_pairs(x, y, rank=4).eigenvalues)
        rng = np.random.default_rng(4)
        q, r = np.linalg.qr(rng.normal(size=(4, 4)))
        q = q * np.sign(np.diag(r))
        theta1 = estimate_theta(dmd_from_pairs(q @ x, q @ y, rank=4).eigenvalues)
        assert theta0 == theta1 == pytest.approx(0.5)
