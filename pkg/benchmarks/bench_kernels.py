"""Time the hot kernels and an end-to-end fit under the numpy and numba backends.

Usage::

    python benchmarks/bench_kernels.py [--n 2000] [--d 5] [--repeats 20]

Each kernel is first called once per backend so numba compilation is
excluded from the timings. Both backends must produce identical bins; the
script checks that before it reports anything.
"""

import argparse
import time

import numpy as np

from gbht import kernels
from gbht.boosting import GbhtConfig, fit_gbht
from gbht.synthetic import SyntheticKind, sample_synthetic
from gbht.transform import ScaleParams, reference_scale, sample_transform


def best_of(func, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(X, rng):
    n = X.shape[0]
    t = sample_transform(rng, X.shape[1], ScaleParams(-1.0, 0.0, reference_scale(X)))
    M, b = t.matrix, t.translation
    w = rng.random(n) + 0.1
    prev = rng.random(n) + 0.05
    cand = np.where(rng.random(n) < 0.3, rng.random(n) * 4, 0.0)
    upper = 1 - 1e-6
    Q = X[: min(n, 500)]
    return {
        "transformed_bins": lambda: kernels.transformed_bins(X, M, b),
        "group_bins": lambda: kernels.group_bins(X, M, b, w),
        "golden_section_alpha": lambda: kernels.golden_section_alpha(prev, cand, upper, 1e-8),
        "newton_alpha": lambda: kernels.newton_alpha(prev, cand, upper, 1e-8),
        "kde_kernel_sum(500 queries)": lambda: kernels.kde_kernel_sum(Q, X, 0.5),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--iterations", type=int, default=200, help="T for the end-to-end fit")
    args = ap.parse_args()

    X = sample_synthetic(SyntheticKind("I", args.d), args.n, np.random.default_rng(0))
    backends = ["numpy"] + (["numba"] if kernels.NUMBA_AVAILABLE else [])
    if len(backends) == 1:
        print("numba is not installed; only the numpy backend is timed")

    results = {}
    bins = {}
    for name in backends:
        kernels.set_backend(name)
        table = cases(X, np.random.default_rng(1))
        for fn in table.values():
            fn()  # warm-up (compiles under numba)
        bins[name] = table["transformed_bins"]()
        results[name] = {k: best_of(fn, args.repeats) for k, fn in table.items()}
        cfg = GbhtConfig(iterations=args.iterations, seed=0)
        fit_gbht(X, GbhtConfig(iterations=2, seed=0))
        results[name][f"fit_gbht(T={args.iterations})"] = best_of(lambda: fit_gbht(X, cfg), 3)
    if len(backends) == 2:
        assert np.array_equal(bins["numpy"], bins["numba"]), "backends disagree on bin indices"

    print(f"n={args.n}, d={args.d}, best of {args.repeats} (fits: best of 3)")
    header = f"{'kernel':32s}" + "".join(f"{b:>12s}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for key in results[backends[0]]:
        row = f"{key:32s}" + "".join(f"{results[b][key] * 1e3:10.3f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{results['numpy'][key] / results['numba'][key]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
