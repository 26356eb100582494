"""Spectral regularisation of the Koopman operator.

Two mechanisms act directly on the operator's eigenvalues:

* eigeninit: decompose a random initial operator, resample every eigenvalue
  modulus from a spike-and-slab distribution (phases untouched, conjugate
  pairs drawn together), and rebuild a real matrix. The spike at modulus 1
  models conserved dynamics, the slab inside the unit interval dissipation.
* eigenloss: the penalty ``sum_j (|lambda_j| - 1)^2`` with an analytic
  gradient through the eigendecomposition via the simple-eigenvalue adjoint
  ``d lambda_j = u_j^H dU v_j / (u_j^H v_j)``.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateSpectrumWarning, IllConditionedError, ParameterError
from .linalg import eig_decompose, eigvals, reconstruct_real
from .nn import init_weights

DEGENERATE_GAP = 1e-10


@dataclass(frozen=True)
class SpikeSlabSpec:
    """Modulus distribution ``theta * U(a, b) + (1 - theta) * delta(1)``."""

    theta: float = 0.0
    slab: tuple = (0.0, 1.0)

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ParameterError(f"theta must be in [0, 1], got {self.theta}")
        a, b = self.slab
        if not (0.0 <= a < b <= 1.0):
            raise ParameterError(f"slab interval must satisfy 0 <= a < b <= 1, got {self.slab}")


@dataclass(frozen=True)
class EigenlossConfig:
    """Weight and gradient-denominator floor for the eigenvalue penalty."""

    weight: float = 0.0
    modulus_floor: float = 1e-12

    def __post_init__(self):
        if self.weight < 0.0:
            raise ParameterError(f"eigenloss weight must be >= 0, got {self.weight}")
        if self.modulus_floor <= 0.0:
            raise ParameterError(f"modulus floor must be > 0, got {self.modulus_floor}")


DEFAULT_EIGENLOSS = EigenlossConfig()


def sample_moduli(pairing, spec, rng):
    """Draw one target modulus per eigenvalue.

    Conjugate partners share a single draw. Pairs are drawn first in
    spectral order, then the real eigenvalues, so a fixed seed gives the
    same moduli regardless of later use.
    """
    if not isinstance(spec, SpikeSlabSpec):
        raise ParameterError("spec must be a SpikeSlabSpec")
    n = len(pairing)
    a, b = spec.slab
    out = np.empty(n)

    def draw():
        if rng.random() < spec.theta:
            return a + (b - a) * rng.random()
        return 1.0

    for j, partner in enumerate(pairing):
        if partner > j:
            r = draw()
            out[j] = r
            out[partner] = r
    for j, partner in enumerate(pairing):
        if partner == -1:
            out[j] = draw()
    return out


def eigeninit(u0, spec, rng):
    """Resample the eigenvalue moduli of ``u0``; phases are preserved.

    Decomposition or conditioning failures propagate; see
    ``eigeninit_operator`` for the retrying draw used at model build time.
    """
    dec = eig_decompose(u0)
    moduli = sample_moduli(dec.pairing, spec, rng)
    lam = dec.eigenvalues
    mags = np.abs(lam)
    new_lam = np.empty_like(lam)
    for j, partner in enumerate(dec.pairing):
        if partner != -1 and partner < j:
            new_lam[j] = np.conj(new_lam[partner])
            continue
        phase = lam[j] / mags[j] if mags[j] > 0.0 else 1.0 + 0.0j
        new_lam[j] = moduli[j] * phase
    rebuilt, _ = reconstruct_real(dec, new_lam)
    return rebuilt


def eigeninit_operator(n, spec, rng, sigma=None, retries=10):
    """Draw an eigeninit-initialised n-by-n operator.

    The base operator is element-wise Gaussian (sigma defaults to
    1/sqrt(n)); on a decomposition failure a fresh base is drawn, up to
    ``retries`` times.
    """
    if sigma is None:
        sigma = 1.0 / np.sqrt(n)
    last_error = None
    for _ in range(retries):
        u0 = init_weights((n, n), "gaussian", rng, sigma=sigma)
        try:
            return eigeninit(u0, spec, rng)
        except (ConvergenceError, IllConditionedError) as exc:
            last_error = exc
    raise last_error


def eigenloss_value(u):
    """Penalty ``sum_j (|lambda_j| - 1)^2`` over all eigenvalues of ``u``."""
    mods = np.abs(eigvals(u))
    return float(np.sum((mods - 1.0) ** 2))


def _warn_if_degenerate(lam):
    n = len(lam)
    if n < 2:
        return
    gap = np.min(np.abs(lam[:, None] - lam[None, :])[~np.eye(n, dtype=bool)])
    if gap < DEGENERATE_GAP:
        warnings.warn(
            f"eigenvalue gap {gap:.2e} below {DEGENERATE_GAP:.0e}; the "
            "simple-eigenvalue adjoint is applied regardless",
            DegenerateSpectrumWarning, stacklevel=3)


def eigenloss_grad(u, config=DEFAULT_EIGENLOSS):
    """Gradient of ``eigenloss_value`` with respect to the matrix entries."""
    _, grad = _eigenloss_from_decomposition(eig_decompose(u), config)
    return grad


def eigenloss_value_and_grad(u, config=DEFAULT_EIGENLOSS):
    """Penalty and gradient from a single decomposition (training hot path)."""
    return _eigenloss_from_decomposition(eig_decompose(u), config)


def _eigenloss_from_decomposition(dec, config):
    lam = dec.eigenvalues
    _warn_if_degenerate(lam)
    mods = np.abs(lam)
    value = float(np.sum((mods - 1.0) ** 2))

    # d|lambda|/dU for a simple eigenvalue, summed with the chain factor
    # 2(|lambda| - 1); conjugate-pair terms combine to a real matrix.
    coeff = 2.0 * (mods - 1.0) / np.maximum(mods, config.modulus_floor) * np.conj(lam)
    v = dec.right_vectors
    left = dec.left_vectors
    dots = np.sum(np.conj(left) * v, axis=0)
    grad_c = (np.conj(left) * (coeff / dots)[None, :]) @ v.T
    grad = np.ascontiguousarray(grad_c.real)

    scale = float(np.linalg.norm(grad))
    imag_resid = float(np.max(np.abs(grad_c.imag))) if lam.size else 0.0
    if scale > 0.0 and imag_resid > 1e-8 * scale:
        warnings.warn(
            f"imaginary residual {imag_resid:.2e} in eigenloss gradient "
            "exceeds the realness contract; pairing may be degenerate",
            DegenerateSpectrumWarning, stacklevel=3)
    return value, grad
