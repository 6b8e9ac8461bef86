"""Compare the compiled tree kernel with the numpy fallback.

    python benchmarks/bench_tree.py [--rows 3000] [--features 20] [--repeat 3]

Both kernels grow the same trees (outputs are checked for equality); the
table reports the best wall time of ``--repeat`` runs per workload.
"""

import argparse
import time

import numpy as np

from hrvsepsis.learners import _tree_py

try:
    from hrvsepsis.learners import _tree_core
except ImportError:        # extension not built
    _tree_core = None

GINI, NEWTON = 0, 1


def workloads(rows, features, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, features))
    y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(size=rows) > 0).astype(np.float64)
    w = rng.integers(0, 3, rows).astype(np.float64)     # bootstrap-style counts
    p = np.full(rows, y.mean())
    k = max(1, int(np.sqrt(features)))
    return {
        "forest tree (gini, depth 10, sqrt features)":
            (X, w, y, np.zeros(rows), GINI, 10, k),
        "boosting round (newton, depth 4, all features)":
            (X, np.ones(rows), p - y, p * (1 - p), NEWTON, 4, 0),
    }


def best_time(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=3000)
    ap.add_argument("--features", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _tree_core is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
        return 1

    print(f"{'workload':48s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for name, (X, w, target, hess, mode, depth, k) in workloads(args.rows, args.features, args.seed).items():
        results = {}
        for label, mod in (("python", _tree_py), ("cython", _tree_core)):
            order = mod.presort(X)
            results[label] = best_time(
                lambda: mod.build_tree(X, order, w, target, hess, mode, depth, 1, k, 1.0, 0.0, 0.0, 7),
                args.repeat)
        tp, tree_p = results["python"]
        tc, tree_c = results["cython"]
        same = all(np.array_equal(tree_p[key], tree_c[key]) for key in tree_p)
        flag = "" if same else "  MISMATCH"
        print(f"{name:48s} {tp:10.4f} {tc:10.4f} {tp / tc:7.1f}x{flag}")

    arrs = tuple(tree_c[key] for key in ("feature", "threshold", "left", "right"))
    Xq = np.random.default_rng(args.seed + 1).normal(size=(args.rows, args.features))
    tp, _ = best_time(lambda: _tree_py.apply_tree(*arrs, Xq), args.repeat)
    tc, _ = best_time(lambda: _tree_core.apply_tree(*arrs, Xq), args.repeat)
    print(f"{'predict (apply last tree to all rows)':48s} {tp:10.4f} {tc:10.4f} {tp / tc:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
