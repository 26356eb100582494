"""Training loop and horizon evaluation for the Koopman autoencoder."""

import time
from dataclasses import dataclass, field

import numpy as np

from .data import windows_from_dataset
from .errors import DimensionError, DivergenceError, ParameterError
from .linalg import eigvals
from .metrics import MetricsLog
from .model import KAEModel, evaluate_loss, kae_forward, total_loss
from .nn import Adam
from .spectral_reg import SpikeSlabSpec

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class TrainConfig:
    """Everything one training run depends on, seed included."""

    horizon: int = 4
    eigenloss_weight: float = 0.0
    u_init: str = "gaussian"
    spike_slab: SpikeSlabSpec = None
    u_sigma: float = None
    epochs: int = 30
    batch_size: int = 128
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    seed: int = 0
    hidden: tuple = (64, 32)
    record_operators: bool = True

    def __post_init__(self):
        if self.horizon < 1:
            raise ParameterError(f"horizon must be >= 1, got {self.horizon}")
        if self.eigenloss_weight < 0:
            raise ParameterError(
                f"eigenloss weight must be >= 0, got {self.eigenloss_weight}")
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ParameterError(f"batch size must be >= 1, got {self.batch_size}")


def build_model(input_dim, latent_dim, config, rng=None, identity_codec=False):
    """Model construction matching a TrainConfig's operator scheme."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    return KAEModel.build(
        input_dim, latent_dim, rng, hidden=config.hidden, u_init=config.u_init,
        u_sigma=config.u_sigma, spike_slab=config.spike_slab,
        identity_codec=identity_codec)


def train(model, dataset, config):
    """Mini-batch Adam on the total loss; returns the per-epoch MetricsLog.

    Per epoch: shuffled batches, a full-validation pass (reconstruction and
    prediction only, so runs with different eigenloss weights stay
    comparable), the operator's eigenvalue moduli, and wall time. Raises
    DivergenceError if the training loss exceeds 1e6 times its initial
    value or stops being finite.
    """
    train_w = windows_from_dataset(dataset, "train", config.horizon + 1)
    val_w = windows_from_dataset(dataset, "val", config.horizon + 1)
    if train_w.shape[0] < 1:
        raise ParameterError("training split has no windows of length horizon+1")

    shuffle_rng = np.random.default_rng(np.random.SeedSequence((config.seed, 1)))
    opt = Adam(model.parameters(), lr=config.lr, betas=config.betas,
               eps=config.eps, weight_decay=config.weight_decay)
    log = MetricsLog()
    n_windows = train_w.shape[0]
    initial_loss = None

    for _ in range(config.epochs):
        t0 = time.perf_counter()
        perm = shuffle_rng.permutation(n_windows)
        loss_sum = 0.0
        for start in range(0, n_windows, config.batch_size):
            idx = perm[start:start + config.batch_size]
            opt.zero_grad()
            parts = total_loss(model, train_w[idx], config.eigenloss_weight)
            opt.step()
            loss_sum += parts.total * len(idx)
            if initial_loss is None:
                # pre-training loss: the guard's reference point
                initial_loss = max(abs(parts.total), 1e-300)
        epoch_train = loss_sum / n_windows

        if not np.isfinite(epoch_train) or epoch_train > DIVERGENCE_FACTOR * initial_loss:
            raise DivergenceError(
                f"training loss {epoch_train:.3e} exceeded {DIVERGENCE_FACTOR:.0e} "
                f"times its initial value {initial_loss:.3e}")

        epoch_val = evaluate_loss(model, val_w).total if val_w.shape[0] else float("nan")
        lam = eigvals(model.koopman.value)
        mods = np.abs(lam)
        log.train_loss.append(float(epoch_train))
        log.val_loss.append(float(epoch_val))
        log.eigenloss.append(float(np.sum((mods - 1.0) ** 2)))
        log.moduli.append(mods)
        if config.record_operators:
            log.operator_history.append(model.koopman.value.copy())
        log.wall_ms.append((time.perf_counter() - t0) * 1e3)
    return log


def evaluate_horizons(model, test_windows, max_horizon):
    """Per-horizon mean prediction error and its sum.

    ``e_l`` is the MSE between the decoded l-step prediction and the true
    state, averaged over all test windows; the cumulative error is
    ``sum_{l=1..max_horizon} e_l``.
    """
    w = np.asarray(test_windows, dtype=np.float64)
    if w.ndim != 3:
        raise DimensionError(f"expected (windows, steps, dim), got {w.shape}")
    if w.shape[1] < max_horizon + 1:
        raise DimensionError(
            f"windows of length {w.shape[1]} are too short for horizon {max_horizon}")
    out = kae_forward(model, w[:, 0, :], max_horizon)
    errors = np.empty(max_horizon)
    for step in range(1, max_horizon + 1):
        diff = out.predictions[step - 1] - w[:, step, :]
        errors[step - 1] = float(np.mean(diff * diff))
    return errors, float(np.sum(errors))
