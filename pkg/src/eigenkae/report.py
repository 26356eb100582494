"""Monte-Carlo report of eigenvalue-modulus distributions at initialisation.

Schemes draw an operator in the way they are actually used:

* ``gaussian`` composes ``depth`` operator-sized factors with N(0, sigma)
  entries (sigma defaults to 1/sqrt(n)); depth 1 is a plain draw.
* ``xavier`` and ``he`` are fan-based network initialisers, so the probed
  operator is the end-to-end latent loop of a bottleneck codec (operator
  width -> hidden widths -> data width and back, ``depth`` layers in
  total), each layer drawn by the scheme.
* ``eigeninit`` resamples the moduli of a Gaussian draw directly, so its
  histogram shows the spike-and-slab distribution itself.

The histogram uses 0.05-wide bins over [0, 2] plus one overflow bin.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .linalg import eigvals
from .nn import init_weights
from .spectral_reg import SpikeSlabSpec, eigeninit_operator

BIN_WIDTH = 0.05
BIN_EDGES = np.linspace(0.0, 2.0, 41)

KNOWN_SCHEMES = ("eigeninit", "gaussian", "xavier", "he")


@dataclass(frozen=True)
class SpectrumReport:
    n: int
    depth: int
    samples: int
    counts: dict      # scheme -> int array of len(BIN_EDGES)-1 + 1 overflow
    means: dict       # scheme -> mean eigenvalue modulus


def _codec_chain(n, probe_dim, hidden):
    dec = [n, *reversed(hidden), probe_dim]
    enc = [probe_dim, *hidden, n]
    return dec + enc[1:]


def _draw_operator(scheme, n, depth, rng, theta, slab, sigma, probe_dim, hidden):
    if scheme == "eigeninit":
        return eigeninit_operator(n, SpikeSlabSpec(theta, tuple(slab)), rng, sigma=sigma)
    if scheme == "gaussian":
        sig = sigma if sigma is not None else 1.0 / np.sqrt(n)
        op = np.eye(n)
        for _ in range(depth):
            op = init_weights((n, n), "gaussian", rng, sigma=sig) @ op
        return op
    if scheme in ("xavier", "he"):
        widths = _codec_chain(n, probe_dim, hidden)
        if len(widths) - 1 != depth:
            raise ParameterError(
                f"fan-based schemes derive their layers from the codec chain "
                f"{widths} ({len(widths) - 1} layers); pass depth={len(widths) - 1} "
                "or adjust hidden/probe_dim")
        op = np.eye(n)
        for w_in, w_out in zip(widths[:-1], widths[1:]):
            op = init_weights((w_out, w_in), scheme, rng) @ op
        return op
    raise ParameterError(f"unknown scheme {scheme!r}; choose from {KNOWN_SCHEMES}")


def init_spectrum_report(n, depth, schemes, samples, rng, *, theta=0.0,
                         slab=(0.0, 1.0), sigma=None, probe_dim=2,
                         hidden=(64, 32)):
    """Sample operators per scheme and histogram their eigenvalue moduli."""
    if samples < 1:
        raise ParameterError(f"samples must be >= 1, got {samples}")
    if depth < 1:
        raise ParameterError(f"depth must be >= 1, got {depth}")
    counts = {}
    means = {}
    for scheme in schemes:
        mods = np.empty(samples * n)
        for i in range(samples):
            op = _draw_operator(scheme, n, depth, rng, theta, slab, sigma,
                                probe_dim, hidden)
            mods[i * n:(i + 1) * n] = np.abs(eigvals(op))
        hist, _ = np.histogram(mods[mods < BIN_EDGES[-1]], bins=BIN_EDGES)
        overflow = int(np.count_nonzero(mods >= BIN_EDGES[-1]))
        counts[scheme] = np.concatenate([hist, [overflow]]).astype(np.int64)
        means[scheme] = float(np.mean(mods))
    return SpectrumReport(n, depth, samples, counts, means)


def write_spectrum_report(report, hist_path, means_path):
    """Histogram and mean-modulus CSVs (deterministic byte content)."""
    lines = ["scheme,bin_low,bin_high,count"]
    for scheme, counts in report.counts.items():
        for j in range(len(BIN_EDGES) - 1):
            lines.append(f"{scheme},{float(BIN_EDGES[j])!r},"
                         f"{float(BIN_EDGES[j + 1])!r},{counts[j]}")
        lines.append(f"{scheme},{float(BIN_EDGES[-1])!r},inf,{counts[-1]}")
    with open(hist_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    lines = ["scheme,mean_modulus,samples,n,depth"]
    for scheme, mean in report.means.items():
        lines.append(f"{scheme},{mean!r},{report.samples},{report.n},{report.depth}")
    with open(means_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
