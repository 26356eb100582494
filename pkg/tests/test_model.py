import numpy as np
import pytest

from eigenkae.errors import DimensionError, ParameterError
from eigenkae.linalg import eig_decompose
from eigenkae.model import (KAEModel, evaluate_loss, kae_forward, total_loss)
from eigenkae.nn import IdentityMap, Parameter
from eigenkae.spectral_reg import SpikeSlabSpec, eigenloss_grad, eigenloss_value

from oracles import central_difference_gradient


def identity_model(n, u=None):
    koopman = Parameter(np.eye(n) if u is None else u, "koopman")
    return KAEModel(IdentityMap(n), koopman, IdentityMap(n))


def small_model(seed=0, m=3, n=4, hidden=(8, 6)):
    rng = np.random.default_rng(seed)
    return KAEModel.build(m, n, rng, hidden=hidden)


class TestBuild:
    def test_width_chain_enforced(self):
        rng = np.random.default_rng(0)
        model = KAEModel.build(3, 5, rng, hidden=(8,))
        assert model.encoder.out_dim == 5
        assert model.decoder.in_dim == 5
        assert model.koopman.value.shape == (5, 5)

    def test_identity_codec_requires_matching_dims(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DimensionError):
            KAEModel.build(3, 4, rng, identity_codec=True)

    def test_scheme_only_touches_operator(self):
        a = KAEModel.build(3, 4, np.random.default_rng(5), u_init="gaussian")
        b = KAEModel.build(3, 4, np.random.default_rng(5), u_init="eigeninit",
                           spike_slab=SpikeSlabSpec(theta=0.5))
        for pa, pb in zip(a.encoder.parameters(), b.encoder.parameters()):
            assert np.array_equal(pa.value, pb.value)
        for pa, pb in zip(a.decoder.parameters(), b.decoder.parameters()):
            assert np.array_equal(pa.value, pb.value)
        assert not np.array_equal(a.koopman.value, b.koopman.value)

    def test_unknown_scheme(self):
        with pytest.raises(ParameterError):
            KAEModel.build(3, 4, np.random.default_rng(0), u_init="spectral")

    def test_checkpoint_roundtrip(self, tmp_path):
        model = small_model()
        path = tmp_path / "m.kae"
        model.save(path)
        other = small_model(seed=99)
        other.load(path)
        for p, q in zip(model.parameters(), other.parameters()):
            assert np.array_equal(p.value, q.value)


class TestForward:
    def test_identity_model_predicts_input(self):
        model = identity_model(3)
        x = np.random.default_rng(0).normal(size=(5, 3))
        out = kae_forward(model, x, 4)
        assert np.allclose(out.reconstruction, x)
        for step in range(4):
            assert np.allclose(out.predictions[step], x)

    def test_zero_operator_kills_latents(self):
        model = identity_model(3, u=np.zeros((3, 3)))
        x = np.random.default_rng(0).normal(size=(4, 3))
        out = kae_forward(model, x, 3)
        for step in range(1, 4):
            assert np.allclose(out.latents[step], 0.0)

    def test_powers_match_spectral_evolution(self):
        model = small_model(seed=3)
        x = np.random.default_rng(1).normal(size=(6, 3))
        out = kae_forward(model, x, 3)
        dec = eig_decompose(model.koopman.value)
        v = dec.right_vectors
        vinv = np.linalg.inv(v)
        y0 = out.latents[0]
        for step in (1, 2, 3):
            spectral = np.real(v @ np.diag(dec.eigenvalues ** step) @ vinv @ y0.T).T
            assert np.max(np.abs(spectral - out.latents[step])) <= 1e-8

    def test_dimension_check(self):
        model = small_model()
        with pytest.raises(DimensionError):
            kae_forward(model, np.ones((2, 5)), 1)


class TestTotalLoss:
    def test_perfect_fixed_point_zero_loss(self):
        model = identity_model(2)
        window = np.tile(np.array([0.3, -0.7]), (4, 3, 1))
        parts = total_loss(model, window, eps_lambda=0.0)
        assert parts.total == 0.0

    def test_identity_operator_contributes_no_eigenloss(self):
        model = identity_model(2)
        window = np.random.default_rng(0).normal(size=(4, 3, 2))
        with_pen = total_loss(model, window, eps_lambda=1e3, backward=False)
        without = total_loss(model, window, eps_lambda=0.0, backward=False)
        assert with_pen.total == pytest.approx(without.total)
        assert with_pen.eigen == pytest.approx(0.0, abs=1e-24)

    def test_gradients_match_finite_differences(self):
        model = small_model(seed=2)
        rng = np.random.default_rng(4)
        window = rng.normal(size=(5, 4, 3))
        eps_l = 0.7

        for p in model.parameters():
            p.zero_grad()
        total_loss(model, window, eps_l)

        def full_loss():
            return total_loss(model, window, eps_l, backward=False).total

        for p in model.parameters():
            fd = central_difference_gradient(lambda _: full_loss(), p.value, h=1e-5)
            denom = max(np.linalg.norm(fd), 1e-10)
            assert np.linalg.norm(p.grad - fd) / denom <= 1e-4

    def test_gradient_additivity_across_terms(self):
        model = small_model(seed=6)
        rng = np.random.default_rng(7)
        window = rng.normal(size=(4, 3, 3))
        eps_l = 2.5

        for p in model.parameters():
            p.zero_grad()
        total_loss(model, window, eps_l)
        full = {p.name: p.grad.copy() for p in model.parameters()}

        for p in model.parameters():
            p.zero_grad()
        total_loss(model, window, 0.0)
        data_only = {p.name: p.grad.copy() for p in model.parameters()}
        eigen_part = eps_l * eigenloss_grad(model.koopman.value)

        for p in model.parameters():
            expected = data_only[p.name]
            if p.name == "koopman":
                expected = expected + eigen_part
            assert np.max(np.abs(full[p.name] - expected)) <= 1e-10

    def test_window_shape_check(self):
        model = small_model()
        with pytest.raises(DimensionError):
            total_loss(model, np.ones((2, 3)), 0.0)

    def test_negative_weight_rejected(self):
        model = small_model()
        with pytest.raises(ParameterError):
            total_loss(model, np.ones((1, 2, 3)), -1.0)


class TestEvaluateLoss:
    def test_excludes_eigen_term(self):
        model = small_model(seed=8)
        rng = np.random.default_rng(9)
        window = rng.normal(size=(6, 4, 3))
        val = evaluate_loss(model, window)
        ref = total_loss(model, window, 0.0, backward=False)
        assert val.total == pytest.approx(ref.total, rel=1e-12)
        assert val.eigen == 0.0
        assert eigenloss_value(model.koopman.value) > 0.0  # term exists, excluded

    def test_comparable_across_weight_settings(self):
        # same weights => same validation loss regardless of eigenloss weight
        model = small_model(seed=10)
        rng = np.random.default_rng(11)
        window = rng.normal(size=(5, 3, 3))
        assert evaluate_loss(model, window).total == \
            pytest.approx(evaluate_loss(model, window).total)
