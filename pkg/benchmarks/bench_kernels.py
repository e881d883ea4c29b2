"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--points N] [--queries Q] [--repeat R]

Reports the best wall time per operation and the speedup of each backend
over pure Python.  Results from both backends are also checked for equality.
"""
import argparse
import time

import numpy as np

from xwalk import kernels
from xwalk.geometry import Polyline
from xwalk.spatial_index import PointIndex, SegmentIndex


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads(n, q, rng):
    pts = list(enumerate(map(tuple, rng.uniform(0, 40_000, (n, 2)))))
    qs = rng.uniform(0, 40_000, (q, 2))
    lines = []
    for k in range(n // 10):
        start = rng.uniform(0, 40_000, 2)
        steps = np.cumsum(rng.uniform(-300, 300, (4, 2)), axis=0) + start
        lines.append(Polyline(f"L{k}", tuple(map(tuple, np.vstack([start, steps])))))
    order = rng.permutation(n).tolist()

    def ops(backend):
        pix = PointIndex(pts, backend=backend)
        six = SegmentIndex(lines, backend=backend)
        return {
            "build point index": lambda: PointIndex(pts, backend=backend),
            "nearest point": lambda: tuple(a.tolist() for a in pix.nearest_many(qs[:, 0], qs[:, 1])),
            "within 250 ft": lambda: [pix.within_indices(c, 250.0) for c in qs[:2000]],
            "nearest segment": lambda: tuple(a.tolist() for a in six.nearest_many(qs[:, 0], qs[:, 1])),
            "greedy nms 24 ft": lambda: tuple(a.tolist() for a in pix.nms(order, 24.0)),
        }
    return ops


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=50_000)
    ap.add_argument("--queries", type=int, default=50_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    ops = workloads(args.points, args.queries, rng)
    names = kernels.available()
    results = {}
    for b in names:
        results[b] = {k: best_of(fn, args.repeat) for k, fn in ops(b).items()}
    print(f"{args.points} points, {args.queries} queries, best of {args.repeat}")
    print(f"{'operation':<20}" + "".join(f"{b:>12}" for b in names) + f"{'speedup':>10}")
    for op in results["python"]:
        row = f"{op:<20}" + "".join(f"{results[b][op][0] * 1e3:>10.1f}ms" for b in names)
        if "cython" in results:
            row += f"{results['python'][op][0] / results['cython'][op][0]:>9.1f}x"
            if op != "build point index":
                assert results["python"][op][1] == results["cython"][op][1], op
        print(row)
    if "cython" not in results:
        print("compiled backend not built; only pure Python measured")


if __name__ == "__main__":
    main()
