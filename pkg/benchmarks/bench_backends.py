"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_backends.py [--N 1000] [--batch 64] [--repeat 5]

Each kernel runs on the same inputs under both backends; the table shows
the best of ``--repeat`` runs and the speedup, followed by one full
permutation test per backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mvtwosample import _backend, _kernels_py, edf, graph
from mvtwosample import methods as M
from mvtwosample.core import PooledSample, distance_matrix
from mvtwosample.permutation import PermutationPlan, permutation_test


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def inputs(N, d, batch, seed):
    g = np.random.default_rng(seed)
    p = PooledSample(g.normal(size=(N, d)), np.arange(N) < N // 2)
    dm = distance_matrix(p)
    K = np.ascontiguousarray(np.log(np.maximum(dm.values, 1e-12)))
    labels = np.zeros((batch, N), dtype=np.uint8)
    for r in range(batch):
        labels[r, g.permutation(N)[: N // 2]] = 1
    D = np.ascontiguousarray(edf.dominance(p))
    nbrs = np.ascontiguousarray(graph.neighbor_lists(dm, 5).indices)
    rank = np.arange(N, dtype=np.int64)
    edges = np.ascontiguousarray(np.asarray(_kernels_py.prim_mst(dm.values, rank)), dtype=np.int64)
    return p, dm, K, labels, D, nbrs, rank, edges


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=1000)
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--B", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if "cython" not in _backend.available():
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    from mvtwosample import _kernels as cy

    p, dm, K, labels, D, nbrs, rank, edges = inputs(args.N, args.d, args.batch, args.seed)
    cases = {
        "block_sums": lambda k: k.block_sums(K, labels),
        "dominance_counts": lambda k: k.dominance_counts(D, labels),
        "same_neighbor_counts": lambda k: k.same_neighbor_counts(nbrs, labels),
        "cross_edge_counts": lambda k: k.cross_edge_counts(edges, labels),
        "dominance_matrix": lambda k: k.dominance_matrix(p.points),
        "prim_mst": lambda k: k.prim_mst(dm.values, rank),
    }
    print(f"N={args.N} d={args.d} batch={args.batch}, best of {args.repeat}")
    print(f"{'kernel':<22}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in cases.items():
        tp = best_of(lambda: fn(_kernels_py), args.repeat)
        tc = best_of(lambda: fn(cy), args.repeat)
        print(f"{name:<22}{1e3 * tp:>12.2f}{1e3 * tc:>12.2f}{tp / tc:>9.1f}x")

    names = [nm for nm in M.CONTINUOUS_METHODS if args.d == 2 or nm not in ("ES", "EP")]
    plan = PermutationPlan(B=args.B, seed=1, methods=names)
    print(f"\nfull permutation test, B={args.B}, {len(names)} methods")
    pvals = {}
    for b in ("python", "cython"):
        _backend.set_backend(b)
        t0 = time.perf_counter()
        out = permutation_test(p, plan)
        print(f"  {b:<8}{time.perf_counter() - t0:8.2f} s")
        pvals[b] = [o.p_value for o in out.methods.values()]
    print(f"  identical p-values: {pvals['python'] == pvals['cython']}")


if __name__ == "__main__":
    main()
