"""The Koopman autoencoder: encoder, linear operator, decoder.

The operator advances latent codes one step per multiplication; multi-step
prediction is repeated multiplication (never through the eigendecomposition,
which is reserved for the spectral penalty and diagnostics).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .nn import (IdentityMap, MLP, Parameter, assign_params, init_weights,
                 load_params, mse_with_grad, save_params)
from .spectral_reg import (DEFAULT_EIGENLOSS, EigenlossConfig, SpikeSlabSpec,
                           eigeninit_operator, eigenloss_value_and_grad)

U_INIT_SCHEMES = ("gaussian", "xavier", "eigeninit")


class KAEModel:
    """Encoder psi, Koopman matrix (no bias), decoder."""

    def __init__(self, encoder, koopman, decoder):
        n = koopman.value.shape[0]
        if koopman.value.shape != (n, n):
            raise DimensionError(f"Koopman matrix must be square, got {koopman.value.shape}")
        if encoder.out_dim != n or decoder.in_dim != n:
            raise DimensionError(
                f"latent width mismatch: encoder out {encoder.out_dim}, "
                f"operator {n}, decoder in {decoder.in_dim}")
        if encoder.in_dim != decoder.out_dim:
            raise DimensionError("encoder input and decoder output widths differ")
        self.encoder = encoder
        self.koopman = koopman
        self.decoder = decoder

    @property
    def input_dim(self):
        return self.encoder.in_dim

    @property
    def latent_dim(self):
        return self.koopman.value.shape[0]

    @classmethod
    def build(cls, input_dim, latent_dim, rng, hidden=(64, 32), u_init="gaussian",
              u_sigma=None, spike_slab=None, identity_codec=False):
        """Construct a model with independent RNG streams per component.

        Streams are spawned for encoder, decoder, and operator in that
        order, so changing only the operator scheme leaves the codec
        weights bit-identical.
        """
        enc_rng, dec_rng, u_rng = rng.spawn(3)
        if identity_codec:
            if input_dim != latent_dim:
                raise DimensionError("identity codec requires input_dim == latent_dim")
            encoder = IdentityMap(input_dim)
            decoder = IdentityMap(input_dim)
        else:
            encoder = MLP((input_dim, *hidden, latent_dim), enc_rng, name="encoder")
            decoder = MLP((latent_dim, *reversed(hidden), input_dim), dec_rng, name="decoder")
        koopman = Parameter(_init_operator(latent_dim, u_init, u_rng, u_sigma, spike_slab),
                            name="koopman")
        return cls(encoder, koopman, decoder)

    def parameters(self):
        return [*self.encoder.parameters(), self.koopman, *self.decoder.parameters()]

    def save(self, path):
        save_params(path, self.parameters())

    def load(self, path):
        assign_params(self.parameters(), load_params(path))


def _init_operator(n, scheme, rng, sigma, spike_slab):
    if scheme == "gaussian":
        # default scale 1/sqrt(3n): the element-wise baseline init, whose
        # eigenvalue moduli average ~0.4 at n=8 (uniform-fan default scale)
        return init_weights((n, n), "gaussian", rng,
                            sigma=(1.0 / np.sqrt(3.0 * n)) if sigma is None else sigma)
    if scheme == "xavier":
        return init_weights((n, n), "xavier", rng)
    if scheme == "eigeninit":
        spec = spike_slab if spike_slab is not None else SpikeSlabSpec()
        return eigeninit_operator(n, spec, rng, sigma=sigma)
    raise ParameterError(f"unknown operator init {scheme!r}; choose from {U_INIT_SCHEMES}")


@dataclass
class KAEForward:
    """Forward outputs: reconstruction, the horizon of predictions, and the
    latent trace [y_k, U y_k, ..., U^H y_k]."""

    reconstruction: np.ndarray
    predictions: np.ndarray   # (H, batch, input_dim)
    latents: np.ndarray       # (H+1, batch, latent_dim)


def kae_forward(model, x, horizon):
    """Reconstruct ``x`` and predict ``horizon`` steps ahead (no gradients)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise DimensionError(
            f"expected states of shape (batch, {model.input_dim}), got {x.shape}")
    if horizon < 0:
        raise ParameterError(f"horizon must be >= 0, got {horizon}")
    y, _ = model.encoder.forward(x)
    recon, _ = model.decoder.forward(y)
    ut = model.koopman.value.T
    latents = np.empty((horizon + 1, x.shape[0], model.latent_dim))
    latents[0] = y
    preds = np.empty((horizon, x.shape[0], model.input_dim))
    for step in range(1, horizon + 1):
        latents[step] = latents[step - 1] @ ut
        preds[step - 1], _ = model.decoder.forward(latents[step])
    return KAEForward(recon, preds, latents)


@dataclass
class LossBreakdown:
    total: float
    reconstruction: float
    prediction: float
    eigen: float


def total_loss(model, windows, eps_lambda, eigen_config=DEFAULT_EIGENLOSS,
               backward=True):
    """Reconstruction + horizon-averaged prediction + weighted eigenloss.

    ``windows`` has shape (batch, H+1, input_dim); the loss is
    ``MSE(x_k, x~_k) + (1/H) sum_l MSE(x_{k+l}, x^_{k+l})
    + eps_lambda * sum_j (|lambda_j| - 1)^2``.
    With ``backward`` the parameter gradients are accumulated (the eigen
    term flows into the operator through the eigenvalue adjoint).
    """
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim != 3 or w.shape[2] != model.input_dim:
        raise DimensionError(
            f"expected windows of shape (batch, H+1, {model.input_dim}), got {w.shape}")
    if eps_lambda < 0:
        raise ParameterError(f"eigenloss weight must be >= 0, got {eps_lambda}")
    horizon = w.shape[1] - 1

    x0 = w[:, 0, :]
    y0, enc_cache = model.encoder.forward(x0)
    recon, recon_cache = model.decoder.forward(y0)
    recon_loss, recon_grad = mse_with_grad(recon, x0)

    ut = model.koopman.value.T
    lat = [y0]
    dec_caches = []
    step_grads = []
    pred_loss = 0.0
    for step in range(1, horizon + 1):
        y = lat[-1] @ ut
        xhat, cache = model.decoder.forward(y)
        loss_l, grad_l = mse_with_grad(xhat, w[:, step, :])
        pred_loss += loss_l
        lat.append(y)
        dec_caches.append(cache)
        step_grads.append(grad_l)
    if horizon > 0:
        pred_loss /= horizon

    eigen_val = 0.0
    eigen_grad = None
    if eps_lambda > 0.0:
        cfg = eigen_config if isinstance(eigen_config, EigenlossConfig) else DEFAULT_EIGENLOSS
        eigen_val, eigen_grad = eigenloss_value_and_grad(model.koopman.value, cfg)

    total = recon_loss + pred_loss + eps_lambda * eigen_val

    if backward:
        scale = 1.0 / horizon if horizon > 0 else 0.0
        g_latent = np.zeros_like(y0)
        for step in range(horizon, 0, -1):
            g_y = model.decoder.backward(dec_caches[step - 1], step_grads[step - 1] * scale)
            g_latent += g_y
            model.koopman.grad += g_latent.T @ lat[step - 1]
            g_latent = g_latent @ model.koopman.value
        g_latent += model.decoder.backward(recon_cache, recon_grad)
        model.encoder.backward(enc_cache, g_latent)
        if eigen_grad is not None:
            model.koopman.grad += eps_lambda * eigen_grad

    return LossBreakdown(float(total), float(recon_loss), float(pred_loss), float(eigen_val))


def evaluate_loss(model, windows):
    """Reconstruction + averaged prediction loss without the eigen term or
    gradients; this is the comparable validation metric across schemes."""
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim != 3 or w.shape[2] != model.input_dim:
        raise DimensionError(
            f"expected windows of shape (batch, H+1, {model.input_dim}), got {w.shape}")
    horizon = w.shape[1] - 1
    out = kae_forward(model, w[:, 0, :], horizon)
    recon_loss = float(np.mean((out.reconstruction - w[:, 0, :]) ** 2))
    pred_loss = 0.0
    for step in range(1, horizon + 1):
        pred_loss += float(np.mean((out.predictions[step - 1] - w[:, step, :]) ** 2))
    if horizon > 0:
        pred_loss /= horizon
    return LossBreakdown(recon_loss + pred_loss, recon_loss, pred_loss, 0.0)
