"""Benchmark the compiled kernels against the numpy/scipy fallback.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from qvreg.kernels import _fallback

try:
    from qvreg.kernels import _core
except ImportError:
    _core = None


def bench(fn, *args, repeat=7):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'n':>10}{'compiled':>12}{'fallback':>12}{'speedup':>9}")
    for n in (10_000, 100_000, 1_000_000):
        terms = rng.standard_normal(n)
        tf = bench(_fallback.kahan_cumsum, terms)
        if _core is not None:
            tc = bench(_core.kahan_cumsum, terms)
            np.testing.assert_array_equal(_core.kahan_cumsum(terms), _fallback.kahan_cumsum(terms))
        else:
            tc = float("nan")
        print(f"{'kahan_cumsum':<14}{n:>10}{tc:>11.4f}s{tf:>11.4f}s{tf / tc:>8.1f}x")
    for n in (10_000, 100_000, 1_000_000):
        b = rng.standard_normal(n)
        tf = bench(_fallback.ar1_recursion, 0.97, b, 1.0)
        if _core is not None:
            tc = bench(_core.ar1_recursion, 0.97, b, 1.0)
        else:
            tc = float("nan")
        print(f"{'ar1_recursion':<14}{n:>10}{tc:>11.4f}s{tf:>11.4f}s{tf / tc:>8.1f}x")
    if _core is None:
        print("compiled backend unavailable; fallback timings only")


if __name__ == "__main__":
    main()
