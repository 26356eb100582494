"""Run metrics: the per-epoch training log and the convergence-epoch rule."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


@dataclass
class MetricsLog:
    """Per-epoch records of one training run plus optional test metrics.

    ``moduli`` holds the sorted eigenvalue magnitudes of the operator at
    the end of each epoch (epochs x n); ``operator_history`` the matching
    operator snapshots when recording was enabled.
    """

    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    eigenloss: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    moduli: list = field(default_factory=list)
    operator_history: list = field(default_factory=list)
    horizon_errors: np.ndarray = None
    cumulative_error: float = None
    convergence_epoch: int = None

    @property
    def epochs(self):
        return len(self.train_loss)

    def to_csv(self, path):
        """Single-file serialisation: epoch, losses, wall time, then the
        eigenvalue moduli columns."""
        n = len(self.moduli[0]) if self.moduli else 0
        header = "epoch,train_loss,val_loss,eigenloss,wall_ms" + "".join(
            f",mod_{j + 1}" for j in range(n))
        lines = [header]
        for e in range(self.epochs):
            row = [str(e + 1), repr(self.train_loss[e]), repr(self.val_loss[e]),
                   repr(self.eigenloss[e]), repr(self.wall_ms[e])]
            row.extend(repr(float(v)) for v in self.moduli[e])
            lines.append(",".join(row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def convergence_epoch(val_losses, tau=0.05, warmup=5):
    """First epoch whose validation-loss step is a small fraction of the
    largest step seen after warmup.

    With consecutive differences ``D(e) = |val_e - val_{e-1}|``, returns the
    first epoch ``e > warmup`` (1-based) with
    ``D(e) / max_{warmup < e' <= e} D(e') < tau``, treating an all-zero
    difference history as converged. Returns None if never satisfied.
    """
    vals = np.asarray(val_losses, dtype=np.float64)
    if vals.ndim != 1:
        raise ParameterError("val_losses must be a 1-D sequence")
    if not 0.0 < tau < 1.0:
        raise ParameterError(f"tau must be in (0, 1), got {tau}")
    if warmup < 1:
        raise ParameterError(f"warmup must be >= 1, got {warmup}")
    if len(vals) < warmup + 2:
        raise ParameterError(
            f"need at least warmup+2 = {warmup + 2} epochs, got {len(vals)}")

    max_diff = 0.0
    for epoch in range(warmup + 1, len(vals) + 1):
        diff = abs(vals[epoch - 1] - vals[epoch - 2])
        max_diff = max(max_diff, diff)
        ratio = diff / max_diff if max_diff > 0.0 else 0.0
        if ratio < tau:
            return epoch
    return None
