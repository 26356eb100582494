"""Exact dynamic mode decomposition and the slab-probability estimate.

DMD fits a linear evolution matrix to snapshot pairs through an SVD
projection; the fraction of its eigenvalues *away* from the unit circle
estimates the spike-and-slab parameter theta. In the modulus distribution
``theta * U(a, b) + (1 - theta) * delta(1)`` the spike supplies the
unit-modulus eigenvalues, so unit-modulus fraction f maps to
``theta = 1 - f``. The direction of this mapping is a convention of this
package, chosen for consistency with the distribution definition.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, RankDeficiencyError
from .linalg import eigvals, svd

RANK_RTOL = 1e-12


@dataclass(frozen=True)
class DMDResult:
    """Reduced evolution matrix, its spectrum, and the SVD context."""

    operator: np.ndarray          # (rank, rank)
    eigenvalues: np.ndarray       # complex, sorted as in linalg.eigvals
    singular_values: np.ndarray   # the rank retained ones
    rank: int


def dmd_from_pairs(x, y, rank=None):
    """Exact DMD from matched snapshot columns ``y[:, k] = F(x[:, k])``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape != y.shape:
        raise DimensionError(
            f"paired snapshot matrices must share a 2-D shape, got {x.shape} vs {y.shape}")
    dim, m = x.shape
    kmax = min(dim, m)
    if rank is None:
        rank = kmax
    if not 1 <= rank <= kmax:
        raise DimensionError(f"rank must be in [1, {kmax}], got {rank}")

    u, s, v = svd(x, rank)
    if s[rank - 1] < RANK_RTOL * s[0]:
        raise RankDeficiencyError(
            f"singular value {rank} is {s[rank - 1]:.3e} "
            f"(< {RANK_RTOL:.0e} * {s[0]:.3e}); retry with a smaller rank")
    atilde = (u.T @ y @ v) / s[None, :]
    return DMDResult(atilde, eigvals(atilde), s.copy(), rank)


def exact_dmd(snapshots, rank=None):
    """Exact DMD of one trajectory given as rows ``x_1 .. x_m``."""
    snaps = np.asarray(snapshots, dtype=np.float64)
    if snaps.ndim != 2 or snaps.shape[0] < 2:
        raise DimensionError(
            f"need at least two snapshots of equal dimension, got shape {snaps.shape}")
    return dmd_from_pairs(snaps[:-1].T, snaps[1:].T, rank)


def dataset_snapshot_pairs(dataset):
    """Concatenate consecutive-state pairs from all trajectories; pairs
    never straddle a trajectory boundary. Returns column matrices (X, Y)."""
    xs, ys = [], []
    for traj in dataset.trajectories:
        xs.append(traj.states[:-1])
        ys.append(traj.states[1:])
    x = np.concatenate(xs, axis=0).T
    y = np.concatenate(ys, axis=0).T
    return x, y


def estimate_theta(eigenvalues, tol=1e-3):
    """Slab probability: the fraction of eigenvalues off the unit circle.

    An eigenvalue counts as unit-modulus when ``||lambda| - 1| < tol``;
    those come from the spike, so ``theta_hat = 1 - unit_fraction``.
    """
    lam = np.asarray(eigenvalues)
    if lam.size == 0:
        raise ParameterError("eigenvalue list is empty")
    if tol <= 0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    unit = np.count_nonzero(np.abs(np.abs(lam) - 1.0) < tol)
    return 1.0 - unit / lam.size
