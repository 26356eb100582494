"""Pure-NumPy eigensolver kernel.

Hessenberg reduction followed by Francis double-shift QR gives the real
Schur form; eigenvalues come from the 1x1/2x2 diagonal blocks and right
eigenvectors from inverse iteration with an LU solve whose zero pivots
are floored (the standard trick, so exactly singular shifts still work).

This module mirrors ``eigenkae.linalg._kernel_cy`` operation-for-operation;
the compiled version exists only because the eigenloss path decomposes the
Koopman matrix at every optimiser step.
"""

import numpy as np

from ._common import lu_factor, lu_solve

STATUS_OK = 0
STATUS_NO_CONVERGENCE = 1

FLAG_REAL = 0
FLAG_PAIR_FIRST = 1
FLAG_PAIR_SECOND = 2

_EPS = float(np.finfo(np.float64).eps)
_TINY = float(np.finfo(np.float64).tiny)

# Inverse-iteration policy: fixed start vector per slot, bounded sweeps,
# early exit on a residual at rounding level. Deterministic by design.
_INVIT_MAX_SWEEPS = 5
_INVIT_RTOL = 100.0 * _EPS


def _hessenberg(a):
    """Reduce ``a`` in place to upper Hessenberg form; return (H, Q)."""
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1:, k]
        norm_x = np.sqrt(x @ x)
        if norm_x == 0.0:
            continue
        v = x.copy()
        v[0] += norm_x if v[0] >= 0.0 else -norm_x
        norm_v = np.sqrt(v @ v)
        if norm_v == 0.0:
            continue
        v /= norm_v
        # P = I - 2 v v^T applied to rows/cols k+1: of H and cols of Q
        a[k + 1:, k:] -= np.outer(2.0 * v, v @ a[k + 1:, k:])
        a[:, k + 1:] -= np.outer(a[:, k + 1:] @ v, 2.0 * v)
        q[:, k + 1:] -= np.outer(q[:, k + 1:] @ v, 2.0 * v)
        a[k + 2:, k] = 0.0
    return a, q


def _house3(x, y, z):
    """Unit Householder vector sending (x, y, z) onto e1, or None."""
    s = abs(x) + abs(y) + abs(z)
    if s == 0.0:
        return None
    x, y, z = x / s, y / s, z / s
    norm = np.sqrt(x * x + y * y + z * z)
    v0 = x + norm if x >= 0.0 else x - norm
    v = np.array([v0, y, z])
    norm_v = np.sqrt(v @ v)
    if norm_v == 0.0:
        return None
    return v / norm_v


def _house2(x, y):
    s = abs(x) + abs(y)
    if s == 0.0:
        return None
    x, y = x / s, y / s
    norm = np.sqrt(x * x + y * y)
    v0 = x + norm if x >= 0.0 else x - norm
    v = np.array([v0, y])
    norm_v = np.sqrt(v @ v)
    if norm_v == 0.0:
        return None
    return v / norm_v


def real_schur(a, max_iter):
    """Real Schur form of a square float64 matrix.

    Returns ``(T, Q, status)`` with ``a = Q T Q^T``, T quasi-upper-triangular.
    ``status`` is STATUS_NO_CONVERGENCE if the iteration budget ran out.
    """
    n = a.shape[0]
    t = np.array(a, dtype=np.float64, copy=True)
    if n == 1:
        return t, np.eye(1), STATUS_OK
    t, q = _hessenberg(t)
    # Deflation thresholds: a touch looser than machine precision so the
    # rounding junk left on the structurally-zero subdiagonals of matrices
    # with repeated eigenvalues deflates instead of livelocking the sweep.
    small = 4.0 * n * _EPS * max(np.linalg.norm(a, "fro"), _TINY)

    ihi = n - 1
    total = 0
    stall = 0
    while ihi > 0:
        # Find the start of the active block: first negligible subdiagonal
        # entry scanning up from ihi.
        lo = ihi
        while lo > 0:
            h = abs(t[lo, lo - 1])
            if h <= 4.0 * _EPS * (abs(t[lo - 1, lo - 1]) + abs(t[lo, lo])) or h <= small:
                t[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == ihi:
            ihi -= 1
            stall = 0
            continue
        if lo == ihi - 1:
            ihi -= 2
            stall = 0
            continue

        if total >= max_iter:
            return t, q, STATUS_NO_CONVERGENCE
        total += 1
        stall += 1

        m = ihi
        if stall % 10 == 0:
            # Exceptional shift to break limit cycles (EISPACK-style).
            ss = abs(t[m, m - 1]) + abs(t[m - 1, m - 2])
            s = 1.5 * ss
            det = -0.4375 * ss * ss
        else:
            s = t[m - 1, m - 1] + t[m, m]
            det = t[m - 1, m - 1] * t[m, m] - t[m - 1, m] * t[m, m - 1]

        x = t[lo, lo] * t[lo, lo] + t[lo, lo + 1] * t[lo + 1, lo] - s * t[lo, lo] + det
        y = t[lo + 1, lo] * (t[lo, lo] + t[lo + 1, lo + 1] - s)
        z = t[lo + 2, lo + 1] * t[lo + 1, lo]

        for k in range(lo, m - 1):
            v = _house3(x, y, z)
            if v is not None:
                r = max(lo, k - 1)
                seg = t[k:k + 3, r:]
                seg -= np.outer(2.0 * v, v @ seg)
                e = min(k + 3, m)
                seg = t[: e + 1, k:k + 3]
                seg -= np.outer(seg @ v, 2.0 * v)
                q[:, k:k + 3] -= np.outer(q[:, k:k + 3] @ v, 2.0 * v)
                if k > lo:
                    t[k + 1, k - 1] = 0.0
                    t[k + 2, k - 1] = 0.0
            x = t[k + 1, k]
            y = t[k + 2, k]
            z = t[k + 3, k] if k < m - 2 else 0.0

        v = _house2(x, y)
        if v is not None:
            r = max(lo, m - 2)
            seg = t[m - 1:m + 1, r:]
            seg -= np.outer(2.0 * v, v @ seg)
            seg = t[: m + 1, m - 1:m + 1]
            seg -= np.outer(seg @ v, 2.0 * v)
            q[:, m - 1:m + 1] -= np.outer(q[:, m - 1:m + 1] @ v, 2.0 * v)
            if m - 1 > lo:
                t[m, m - 2] = 0.0
    return t, q, STATUS_OK


def schur_eigvals(t):
    """Eigenvalues and pair flags from a quasi-triangular Schur factor.

    Complex pairs are emitted adjacently, positive imaginary part first and
    the second member the exact conjugate of the first.
    """
    n = t.shape[0]
    w = np.empty(n, dtype=np.complex128)
    flags = np.zeros(n, dtype=np.uint8)
    i = 0
    while i < n:
        if i == n - 1 or t[i + 1, i] == 0.0:
            w[i] = complex(t[i, i], 0.0)
            flags[i] = FLAG_REAL
            i += 1
            continue
        a = t[i, i]
        b = t[i, i + 1]
        c = t[i + 1, i]
        d = t[i + 1, i + 1]
        p = 0.5 * (a - d)
        disc = p * p + b * c
        if disc >= 0.0:
            # Two real eigenvalues hiding in an unsplit 2x2 block.
            sq = np.sqrt(disc)
            zshift = p + sq if p >= 0.0 else p - sq
            lam1 = d + zshift
            lam2 = d if zshift == 0.0 else d - b * c / zshift
            w[i] = complex(lam1, 0.0)
            w[i + 1] = complex(lam2, 0.0)
            flags[i] = FLAG_REAL
            flags[i + 1] = FLAG_REAL
        else:
            sq = np.sqrt(-disc)
            re = d + p
            w[i] = complex(re, sq)
            w[i + 1] = complex(re, -sq)
            flags[i] = FLAG_PAIR_FIRST
            flags[i + 1] = FLAG_PAIR_SECOND
        i += 2
    return w, flags


def _inverse_iteration(a, lam, slot, anorm):
    """One right eigenvector of ``a`` for eigenvalue ``lam``.

    Real shifts run entirely in real arithmetic so real eigenvalues get
    exactly real vectors.
    """
    n = a.shape[0]
    if lam.imag == 0.0:
        m = a - lam.real * np.eye(n)
        b = np.full(n, 0.5)
    else:
        m = a.astype(np.complex128) - lam * np.eye(n, dtype=np.complex128)
        b = np.full(n, 0.5 + 0.0j)
    b[slot % n] += 1.0
    b /= np.sqrt(np.abs(b @ np.conj(b)).real)

    pivot_floor = max(_EPS * anorm, _TINY)
    lu, piv = lu_factor(m, pivot_floor)
    tol = _INVIT_RTOL * max(anorm, _TINY)
    x = b
    for _ in range(_INVIT_MAX_SWEEPS):
        x = lu_solve(lu, piv, x)
        nrm = np.linalg.norm(x)
        if nrm == 0.0 or not np.isfinite(nrm):
            x = b
            continue
        x = x / nrm
        resid = np.linalg.norm(a @ x - lam * x)
        if resid <= tol:
            break
    return x.astype(np.complex128)


def eig_kernel(a, max_iter, want_vectors=True):
    """Eigenvalues (+ optionally raw right eigenvectors) of a real matrix.

    Returns ``(w, flags, v, status)``. Vector columns are unit norm but not
    phase-normalised; FLAG_PAIR_SECOND columns are left zero for the caller
    to fill with conjugates after phase fixing.
    """
    n = a.shape[0]
    if n == 1:
        w = np.array([complex(a[0, 0], 0.0)])
        flags = np.zeros(1, dtype=np.uint8)
        v = np.ones((1, 1), dtype=np.complex128) if want_vectors else None
        return w, flags, v, STATUS_OK

    t, _, status = real_schur(a, max_iter)
    if status != STATUS_OK:
        return None, None, None, status
    w, flags = schur_eigvals(t)
    if not want_vectors:
        return w, flags, None, STATUS_OK

    anorm = float(np.linalg.norm(a, "fro"))
    v = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        if flags[j] == FLAG_PAIR_SECOND:
            continue
        v[:, j] = _inverse_iteration(a, w[j], j, anorm)
    return w, flags, v, STATUS_OK
