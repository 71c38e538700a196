"""Compare the compiled kernels with their numpy twins.

    python benchmarks/bench_core.py [--repeat 200]

Shapes match the retrieval workload: 128x128 images with order-9 kernel
tables, 1440-record databases of dims 7/30/55, and 14-point SMO problems
(k=7 training views per class pair).
"""
import argparse
import statistics
import timeit

import numpy as np

from momentcbir._core import _fallback
from momentcbir.legendre import build_kernel
from momentcbir.svm import kernel_matrix

try:
    from momentcbir._core import _kernels
except ImportError:  # extension not built
    _kernels = None


def bench(fn, repeat):
    number = max(1, int(0.02 / max(timeit.timeit(fn, number=1), 1e-7)))
    runs = timeit.repeat(fn, number=number, repeat=repeat)
    return statistics.median(runs) / number


def cases(rng):
    T = build_kernel(9, 128).table
    F = rng.random((128, 128))
    yield "separable 128px g=9", (lambda: _kernels.separable_moments_loop(F, T, T)), (
        lambda: _fallback.separable_moments(F, T, T))
    for dim in (7, 30, 55):
        X = rng.normal(size=(1440, dim))
        q = X[17].copy()
        yield f"canberra 1x1440 d={dim}", (lambda X=X, q=q: _kernels.canberra_to_many(q, X)), (
            lambda X=X, q=q: _fallback.canberra_to_many(q, X))
    X = rng.normal(size=(1440, 55))
    yield "canberra 1440x1440 d=55", (lambda: _kernels.canberra_pairwise(X)), (
        lambda: _fallback.canberra_pairwise(X))
    Z = np.concatenate([rng.normal(0, 1, (7, 55)), rng.normal(0.5, 1, (7, 55))])
    y = np.repeat([1.0, -1.0], 7)
    K = np.ascontiguousarray(kernel_matrix(Z, Z, "rbf", 1 / 55))
    yield "smo 14 points", (lambda: _kernels.smo_solve(K, y, 10.0, 1e-3, 10000)), (
        lambda: _fallback.smo_solve(K, y, 10.0, 1e-3, 10000))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=15)
    args = ap.parse_args()
    if _kernels is None:
        raise SystemExit("compiled extension not built; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'compiled':>12}{'numpy':>12}{'speedup':>10}")
    for name, compiled, fallback in cases(rng):
        tc, tf = bench(compiled, args.repeat), bench(fallback, args.repeat)
        print(f"{name:<26}{tc * 1e6:>10.1f}us{tf * 1e6:>10.1f}us{tf / tc:>9.1f}x")


if __name__ == "__main__":
    main()
