"""Shared helpers for the linear-algebra layer: input validation and a
small dtype-generic LU used both by inverse iteration and for inverting
the eigenvector matrix."""

import numpy as np

from ..errors import DimensionError, IllConditionedError, ParameterError

_EPS = float(np.finfo(np.float64).eps)
_TINY = float(np.finfo(np.float64).tiny)


def as_real_matrix(a, name="matrix"):
    """Validate and return ``a`` as a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(arr)


def as_square_matrix(a, name="matrix"):
    arr = as_real_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def lu_factor(m, pivot_floor=0.0):
    """In-place LU with partial pivoting on a real or complex square array.

    With ``pivot_floor > 0`` zero pivots are replaced by the floor (used by
    inverse iteration, where the shifted matrix is singular on purpose);
    with the default floor an exactly zero pivot raises.
    """
    n = m.shape[0]
    piv = np.arange(n)
    for k in range(n):
        if k < n - 1:
            p = k + int(np.argmax(np.abs(m[k:, k])))
            if p != k:
                m[[k, p], :] = m[[p, k], :]
                piv[k], piv[p] = piv[p], piv[k]
        if abs(m[k, k]) <= pivot_floor:
            if pivot_floor == 0.0:
                raise IllConditionedError("matrix is numerically singular")
            m[k, k] = pivot_floor
        if k < n - 1:
            m[k + 1:, k] /= m[k, k]
            m[k + 1:, k + 1:] -= np.outer(m[k + 1:, k], m[k, k + 1:])
    return m, piv


def lu_solve(lu, piv, b):
    """Solve with an ``lu_factor`` result; ``b`` may be a vector or matrix."""
    x = b[piv].astype(lu.dtype, copy=True)
    n = lu.shape[0]
    for k in range(1, n):
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - lu[k, k + 1:] @ x[k + 1:]) / lu[k, k]
    return x


def complex_inverse(v):
    """Inverse of a complex square matrix; raises if exactly singular."""
    n = v.shape[0]
    lu, piv = lu_factor(v.astype(np.complex128, copy=True))
    inv = lu_solve(lu, piv, np.eye(n, dtype=np.complex128))
    if not np.all(np.isfinite(inv)):
        raise IllConditionedError("matrix inverse overflowed")
    return inv


def one_norm(a):
    return float(np.max(np.sum(np.abs(a), axis=0)))
