"""Compare the compiled neighbour kernels with the NumPy/SciPy fallback.

    python benchmarks/bench_kernels.py [--n 10000 100000] [--dims 1 3 6 12] [--reps 3]

For each (n, d) the script times ``nearest_neighbors`` under both backends,
checks that they return identical neighbour arrays, and prints the speed-up.
"""
import argparse
import time

import numpy as np

from dagfoci import neighbors
from dagfoci.neighbors import nearest_neighbors


def best_of(fn, reps):
    best = np.inf
    out = None
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[10_000, 100_000])
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 3, 6, 12])
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--ties", action="store_true", help="round coordinates to create many exact ties")
    args = ap.parse_args(argv)

    if neighbors._compiled is None:
        raise SystemExit("compiled kernels are not built; reinstall without DAGFOCI_NO_EXT")
    previous = neighbors.backend_name()
    print(f"{'n':>8} {'d':>3} {'compiled s':>11} {'python s':>10} {'speed-up':>9}  same")
    try:
        for n in args.n:
            for d in args.dims:
                if d > neighbors.KDTREE_MAX_DIM and n > 20_000:
                    # the exact scan is quadratic; skip sizes that take minutes
                    continue
                pts = np.random.default_rng(n + d).normal(size=(n, d))
                if args.ties:
                    pts = np.round(pts, 1)
                neighbors.use_backend("compiled")
                tc, a = best_of(lambda: nearest_neighbors(pts, seed=0).nn, args.reps)
                neighbors.use_backend("python")
                tp, b = best_of(lambda: nearest_neighbors(pts, seed=0).nn, args.reps)
                print(f"{n:>8} {d:>3} {tc:>11.4f} {tp:>10.4f} {tp / tc:>8.1f}x  {np.array_equal(a, b)}")
    finally:
        neighbors.use_backend(previous)


if __name__ == "__main__":
    main()
