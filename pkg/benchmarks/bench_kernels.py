"""Compare the compiled softmax/log-sum-exp kernel against the pure-numpy
fallback.

Run from the repository root:

    python benchmarks/bench_kernels.py

Forces both backends in-process (the fallback via its module, the compiled
one via the regular import path) and reports per-call wall time plus the
maximum elementwise disagreement, which should sit at rounding level.
"""

import time

import numpy as np

from mculearn.kernels import BACKEND, softmax_lse
from mculearn.kernels._pyfallback import softmax_lse as py_softmax_lse


def bench(fn, G, repeats):
    fn(G)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(G)
    return (time.perf_counter() - t0) / repeats


def main():
    rng = np.random.default_rng(0)
    print(f"active backend: {BACKEND}")
    print(f"{'shape':>16} {'compiled/active':>16} {'python':>12} {'speedup':>8}  max |diff|")
    for n, K, repeats in [(100, 10, 2000), (1000, 10, 500),
                          (10000, 10, 100), (100000, 10, 20),
                          (10000, 100, 50)]:
        G = rng.uniform(-5, 5, size=(n, K))
        t_active = bench(softmax_lse, G, repeats)
        t_py = bench(py_softmax_lse, G, repeats)
        Pa, la = softmax_lse(G)
        Pp, lp = py_softmax_lse(G)
        diff = max(np.abs(Pa - Pp).max(), np.abs(la - lp).max())
        print(f"{f'{n}x{K}':>16} {t_active * 1e6:>13.1f}us {t_py * 1e6:>10.1f}us "
              f"{t_py / t_active:>7.2f}x  {diff:.2e}")


if __name__ == "__main__":
    main()
