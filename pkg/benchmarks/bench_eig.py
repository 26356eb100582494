"""Benchmark: compiled eigensolver kernel vs the pure-NumPy fallback.

The eigenloss decomposes the Koopman operator once per optimiser step, so
kernel latency at small n is what decides training throughput. This script
times both kernels on the same matrices, plus the full decomposition path
and an eigenloss training step with whichever backend is active.

Run:  python benchmarks/bench_eig.py [--sizes 4 8 16 32] [--reps 300]
To time the end-to-end rows under the other backend:
      EIGENKAE_BACKEND=python python benchmarks/bench_eig.py
"""

import argparse
import time

import numpy as np

from eigenkae.linalg import backend_name, eig_decompose
from eigenkae.linalg import _kernel_py

try:
    from eigenkae.linalg import _kernel_cy
except ImportError:
    _kernel_cy = None


def timeit(fn, reps):
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        best = min(best, (time.perf_counter() - t0) / reps)
    return best * 1e6  # microseconds


def bench_kernels(sizes, reps):
    print(f"{'n':>4} {'python kernel':>16} {'cython kernel':>16} {'speedup':>9}")
    rng = np.random.default_rng(0)
    for n in sizes:
        a = rng.normal(0.0, 1.0 / np.sqrt(n), (n, n))
        t_py = timeit(lambda: _kernel_py.eig_kernel(a, 100 * n, True), reps)
        if _kernel_cy is not None:
            t_cy = timeit(lambda: _kernel_cy.eig_kernel(a, 100 * n, True), reps)
            print(f"{n:>4} {t_py:>13.1f} us {t_cy:>13.1f} us {t_py / t_cy:>8.1f}x")
        else:
            print(f"{n:>4} {t_py:>13.1f} us {'not built':>16} {'-':>9}")


def bench_decompose(sizes, reps):
    print(f"\nfull eig_decompose on the active backend ({backend_name()}):")
    rng = np.random.default_rng(1)
    for n in sizes:
        a = rng.normal(0.0, 1.0 / np.sqrt(n), (n, n))
        t = timeit(lambda: eig_decompose(a), reps)
        print(f"{n:>4} {t:>13.1f} us")


def bench_training_step(reps):
    from eigenkae.model import KAEModel, total_loss
    from eigenkae.nn import Adam

    rng = np.random.default_rng(2)
    model = KAEModel.build(2, 8, rng)
    opt = Adam(model.parameters())
    windows = rng.normal(size=(256, 13, 2))

    def step():
        opt.zero_grad()
        total_loss(model, windows, 1e3)
        opt.step()

    t = timeit(step, reps)
    print(f"\neigenloss training step (batch 256, horizon 12, n=8, "
          f"backend {backend_name()}): {t:.0f} us")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32])
    parser.add_argument("--reps", type=int, default=300)
    args = parser.parse_args()
    print(f"active backend: {backend_name()}")
    bench_kernels(args.sizes, args.reps)
    bench_decompose(args.sizes, args.reps)
    bench_training_step(max(args.reps // 10, 10))


if __name__ == "__main__":
    main()
