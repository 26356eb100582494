"""Independent oracles used by the tests.

These deliberately avoid the library's own code paths: the eigenvalue
oracle goes through the characteristic polynomial at extended precision,
and gradients are checked by central finite differences.
"""

import mpmath as mp
import numpy as np


def charpoly_eigvals(a, dps=60):
    """Eigenvalues via Faddeev-LeVerrier + polynomial roots in mpmath."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    with mp.workdps(dps):
        am = mp.matrix([[mp.mpf(a[i, j]) for j in range(n)] for i in range(n)])
        coeffs = [mp.mpf(1)]
        m = mp.eye(n)
        for k in range(1, n + 1):
            mk = am * m
            ck = -mp.fsum(mk[i, i] for i in range(n)) / k
            coeffs.append(ck)
            m = mk.copy()
            for i in range(n):
                m[i, i] += ck
        roots = mp.polyroots(coeffs, maxsteps=200, extraprec=200)
        return np.array([complex(r) for r in roots])


def match_distance(got, expected):
    """Greedy nearest matching of two eigenvalue multisets; returns the
    largest pairing distance."""
    got = sorted(got, key=lambda z: (-abs(z), -z.real, -z.imag))
    expected = list(expected)
    worst = 0.0
    for g in got:
        j = int(np.argmin([abs(g - e) for e in expected]))
        worst = max(worst, abs(g - expected.pop(j)))
    return worst


def central_difference_gradient(f, x, h=1e-6):
    """Entry-wise central differences of a scalar function of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        fp = f(x)
        x[idx] = orig - h
        fm = f(x)
        x[idx] = orig
        grad[idx] = (fp - fm) / (2.0 * h)
    return grad
