"""One-sided Jacobi SVD for small dense matrices.

Deterministic and accurate at the sizes this package handles (tall
snapshot matrices for DMD, operators up to ~64x64); quadratic convergence
makes the sweep cap generous.
"""

import numpy as np

from ..errors import ConvergenceError, DimensionError
from ._common import as_real_matrix

_EPS = float(np.finfo(np.float64).eps)
_MAX_SWEEPS = 60


def jacobi_svd(x, rank=None):
    """Rank-``rank`` truncated SVD ``x ~ u @ diag(s) @ v.T``.

    Returns ``(u, s, v)`` with singular values descending. ``rank=None``
    keeps all ``min(rows, cols)`` values.
    """
    a = as_real_matrix(x, "svd input")
    m0, n0 = a.shape
    kmax = min(m0, n0)
    if rank is None:
        rank = kmax
    if not 1 <= rank <= kmax:
        raise DimensionError(
            f"rank must be in [1, {kmax}] for shape {a.shape}, got {rank}")

    transposed = m0 < n0
    work = a.T.copy() if transposed else a.copy()
    n = work.shape[1]
    v = np.eye(n)

    for _ in range(_MAX_SWEEPS):
        rotated = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = work[:, p] @ work[:, p]
                aqq = work[:, q] @ work[:, q]
                apq = work[:, p] @ work[:, q]
                if abs(apq) <= _EPS * np.sqrt(app * aqq):
                    continue
                rotated += 1
                zeta = (aqq - app) / (2.0 * apq)
                t = (1.0 if zeta >= 0.0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                wp = work[:, p].copy()
                work[:, p] = c * wp - s * work[:, q]
                work[:, q] = s * wp + c * work[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if rotated == 0:
            break
    else:
        raise ConvergenceError("Jacobi SVD failed to converge")

    sing = np.sqrt(np.sum(work * work, axis=0))
    order = np.argsort(-sing, kind="stable")
    sing = sing[order]
    work = work[:, order]
    v = v[:, order]

    scale = np.max(sing) if n else 0.0
    for j in range(n):
        if sing[j] > _EPS * max(scale, 1.0):
            work[:, j] /= sing[j]
        else:
            work[:, j] = 0.0
        # fix sign so the dominant left-vector entry is positive
        k = int(np.argmax(np.abs(work[:, j])))
        if work[k, j] < 0.0:
            work[:, j] = -work[:, j]
            v[:, j] = -v[:, j]

    left, right = (v, work) if transposed else (work, v)
    return left[:, :rank], sing[:rank].copy(), right[:, :rank]
