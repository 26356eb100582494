"""Dense linear algebra for small real square matrices.

Eigendecomposition with left and right eigenvectors, reconstruction from a
modified spectrum, spectral radius, and a truncated SVD. Everything is a
pure function of its inputs; eigenvalue ordering is deterministic
(descending modulus, ties by descending real then imaginary part, complex
conjugate pairs adjacent with the positive-imaginary member first).
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, DimensionError, PairingError, IllConditionedError
from . import _backend
from ._common import as_square_matrix, complex_inverse, one_norm
from ._kernel_py import FLAG_PAIR_SECOND, FLAG_REAL, STATUS_OK
from ._svd import jacobi_svd

__all__ = [
    "SolverTolerances",
    "DEFAULT_TOLERANCES",
    "SpectralDecomposition",
    "backend_name",
    "eig_decompose",
    "eigvals",
    "reconstruct_real",
    "spectral_radius",
    "svd",
]

backend_name = _backend.backend_name


@dataclass(frozen=True)
class SolverTolerances:
    """All numerical tolerances of this module in one record."""

    qr_max_iter_factor: int = 100     # QR iteration budget is factor * n
    eigenpair_rtol: float = 1e-9      # residual contract, relative to ||U||
    cond_limit: float = 1e12          # eigenvector-matrix conditioning gate
    imag_rtol: float = 1e-8           # realness contract for reconstruction


DEFAULT_TOLERANCES = SolverTolerances()


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigendecomposition of a real square matrix.

    ``eigenvalues[j]`` pairs with right eigenvector ``right_vectors[:, j]``
    (unit norm) and left eigenvector ``left_vectors[:, j]`` (unit norm,
    ``u^H A = lambda u^H``). ``pairing[j]`` is -1 for a real eigenvalue or
    the index of the complex-conjugate partner, whose stored value is the
    exact conjugate. ``cond_right`` is a 1-norm condition estimate of the
    right eigenvector matrix.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    pairing: tuple
    cond_right: float

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    def moduli(self):
        return np.abs(self.eigenvalues)


def _units_from_flags(w, flags):
    units = []
    i = 0
    n = len(w)
    while i < n:
        if flags[i] == FLAG_REAL:
            units.append((i,))
            i += 1
        else:
            units.append((i, i + 1))
            i += 2
    units.sort(key=lambda u: (-abs(w[u[0]]), -w[u[0]].real, -w[u[0]].imag))
    return units


def _sorted_eigvals(w, flags):
    units = _units_from_flags(w, flags)
    out = np.empty_like(w)
    pairing = [-1] * len(w)
    pos = 0
    for u in units:
        if len(u) == 1:
            out[pos] = w[u[0]]
            pos += 1
        else:
            out[pos] = w[u[0]]
            out[pos + 1] = w[u[1]]
            pairing[pos] = pos + 1
            pairing[pos + 1] = pos
            pos += 2
    return out, tuple(pairing)


def _phase_fixed(col):
    k = int(np.argmax(np.abs(col)))
    mag = abs(col[k])
    if mag > 0.0:
        col = col * (np.conj(col[k]) / mag)
    nrm = np.linalg.norm(col)
    if nrm > 0.0:
        col = col / nrm
    return col


def eigvals(u, *, tolerances=DEFAULT_TOLERANCES, _kernel=None):
    """Sorted eigenvalues of a real square matrix (no eigenvectors)."""
    a = as_square_matrix(u)
    kern = _kernel if _kernel is not None else _backend.eig_kernel
    w, flags, _, status = kern(a, tolerances.qr_max_iter_factor * a.shape[0], False)
    if status != STATUS_OK:
        raise ConvergenceError(
            f"QR iteration did not converge within {tolerances.qr_max_iter_factor}*n steps")
    out, _ = _sorted_eigvals(w, flags)
    return out


def eig_decompose(u, *, tolerances=DEFAULT_TOLERANCES, _kernel=None):
    """Full spectral decomposition with left and right eigenvectors.

    Raises ConvergenceError if the QR iteration stalls and
    IllConditionedError if the right eigenvector matrix is exactly
    singular (defective input).
    """
    a = as_square_matrix(u)
    n = a.shape[0]
    kern = _kernel if _kernel is not None else _backend.eig_kernel
    w, flags, v, status = kern(a, tolerances.qr_max_iter_factor * n, True)
    if status != STATUS_OK:
        raise ConvergenceError(
            f"QR iteration did not converge within {tolerances.qr_max_iter_factor}*n steps")

    units = _units_from_flags(w, flags)
    lam = np.empty(n, dtype=np.complex128)
    vecs = np.empty((n, n), dtype=np.complex128)
    pairing = [-1] * n
    pos = 0
    for unit in units:
        col = _phase_fixed(v[:, unit[0]])
        if len(unit) == 1:
            lam[pos] = w[unit[0]]
            vecs[:, pos] = col
            pos += 1
        else:
            lam[pos] = w[unit[0]]
            lam[pos + 1] = w[unit[1]]
            vecs[:, pos] = col
            vecs[:, pos + 1] = np.conj(col)
            pairing[pos] = pos + 1
            pairing[pos + 1] = pos
            pos += 2

    winv = complex_inverse(vecs)
    cond = one_norm(vecs) * one_norm(winv)
    left = winv.conj().T.copy()
    norms = np.linalg.norm(left, axis=0)
    norms[norms == 0.0] = 1.0
    left /= norms
    return SpectralDecomposition(lam, vecs, left, tuple(pairing), float(cond))


def _check_pairing(lam, pairing):
    for j, partner in enumerate(pairing):
        if partner == -1:
            if lam[j].imag != 0.0:
                raise PairingError(
                    f"eigenvalue {j} is marked real but has imaginary part {lam[j].imag!r}")
        elif partner > j:
            if lam[partner] != np.conj(lam[j]):
                raise PairingError(
                    f"eigenvalues {j} and {partner} are not exact conjugates")


def reconstruct_real(dec, eigenvalues=None, *, tolerances=DEFAULT_TOLERANCES):
    """Real matrix ``Re(V diag(lam) V^-1)`` from a decomposition.

    ``eigenvalues`` replaces the stored spectrum (it must respect the
    stored conjugate pairing). Returns ``(matrix, imag_residual)`` where
    the residual is the largest imaginary entry discarded; for a valid
    pairing it stays below ``tolerances.imag_rtol`` times the result norm.
    """
    lam = dec.eigenvalues if eigenvalues is None else np.asarray(eigenvalues, dtype=np.complex128)
    if lam.shape != (dec.n,):
        raise DimensionError(f"expected {dec.n} eigenvalues, got shape {lam.shape}")
    _check_pairing(lam, dec.pairing)
    if dec.cond_right > tolerances.cond_limit:
        raise IllConditionedError(
            f"eigenvector matrix condition {dec.cond_right:.3e} exceeds "
            f"limit {tolerances.cond_limit:.1e}")

    v = dec.right_vectors
    u = dec.left_vectors
    # rows of V^-1 recovered from the left vectors: w_j = conj(u_j) / (u_j^H v_j)
    dots = np.sum(np.conj(u) * v, axis=0)
    rows = np.conj(u).T / dots[:, None]
    prod = (v * lam[None, :]) @ rows
    imag_residual = float(np.max(np.abs(prod.imag))) if dec.n else 0.0
    return np.ascontiguousarray(prod.real), imag_residual


def spectral_radius(u, *, tolerances=DEFAULT_TOLERANCES):
    """Largest eigenvalue modulus."""
    return float(np.max(np.abs(eigvals(u, tolerances=tolerances))))


def svd(x, rank=None):
    """Truncated SVD ``x ~ u @ diag(s) @ v.T`` with descending ``s``."""
    return jacobi_svd(x, rank)
