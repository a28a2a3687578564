#!/usr/bin/env python3
"""Benchmark: compiled pairwise-Hausdorff kernel vs the NumPy fallback.

The pairwise bag-distance matrix is the hot loop behind k-medoids
clustering (MimlSvm, InsDif) and the bag-to-vector transforms.  This script
times both implementations over growing problem sizes and checks agreement.

Usage: python benchmarks/bench_hausdorff.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from miml._dist import HAVE_EXT, pairwise_sq_hausdorff_np

try:
    from miml._dist._hausdorff_cy import pairwise_sq_hausdorff as compiled
except ImportError:
    compiled = None


def make_bags(rng, m, n_lo, n_hi, d):
    sizes = rng.integers(n_lo, n_hi + 1, size=m)
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    X = rng.normal(size=(int(offsets[-1]), d))
    return X, offsets


def time_call(fn, args, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if compiled is None:
        print("compiled extension not available; showing fallback only\n")

    rng = np.random.default_rng(0)
    cases = [
        (50, 1, 4, 5),
        (150, 2, 5, 8),
        (300, 2, 6, 15),
        (600, 3, 9, 15),
    ]
    header = f"{'bags':>5} {'inst/bag':>9} {'dim':>4} {'numpy (ms)':>11}"
    if compiled is not None:
        header += f" {'compiled (ms)':>14} {'speedup':>8} {'max |diff|':>11}"
    print(header)
    for m, lo, hi, d in cases:
        X, off = make_bags(rng, m, lo, hi, d)
        t_np, ref = time_call(pairwise_sq_hausdorff_np, (X, off, X, off), args.repeat)
        line = f"{m:>5} {f'{lo}-{hi}':>9} {d:>4} {t_np * 1e3:>11.2f}"
        if compiled is not None:
            t_cy, got = time_call(compiled, (X, off, X, off), args.repeat)
            diff = float(np.max(np.abs(np.sqrt(got) - np.sqrt(ref))))
            line += f" {t_cy * 1e3:>14.2f} {t_np / t_cy:>7.1f}x {diff:>11.1e}"
        print(line)
    print(f"\nactive implementation in this environment: "
          f"{'compiled' if HAVE_EXT else 'numpy fallback'}")


if __name__ == "__main__":
    main()
