"""Nearest-neighbor and minimum-spanning-tree statistics.

Distances are compared first; equal distances are ordered by the pooled
sample's tie-break rank (the point index unless the sample says otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _backend
from .core import DistanceMatrix, InputError, MethodError, PMethod, TestResult


def _rank(rank, N: int) -> np.ndarray:
    if rank is None:
        return np.arange(N, dtype=np.int64)
    return np.asarray(rank, dtype=np.int64)


@dataclass(frozen=True)
class NeighborLists:
    """``indices[i]`` are the k nearest other points of i, closest first."""

    indices: np.ndarray

    @property
    def k(self) -> int:
        return self.indices.shape[1]


def neighbor_lists(dm: DistanceMatrix, k: int, rank=None) -> NeighborLists:
    N = dm.N
    if k < 1:
        raise InputError("k must be a positive integer")
    if k >= N:
        raise InputError(f"k={k} needs at least {k + 1} pooled points, got {N}")
    r = _rank(rank, N)
    dist = dm.values.copy()
    np.fill_diagonal(dist, np.inf)
    order = np.lexsort((np.broadcast_to(r, dist.shape), dist), axis=1)
    return NeighborLists(np.ascontiguousarray(order[:, :k], dtype=np.int64))


def knn_from_counts(cx, cy, n: int, m: int, k: int):
    """NN statistic from same-sample neighbor totals: A_x + A_y in [0, 2]."""
    return cx / (n * k) + cy / (m * k)


def knn_statistic(dm: DistanceMatrix, labels, k: int, rank=None) -> float:
    lab = np.asarray(labels, dtype=bool)
    nl = neighbor_lists(dm, k, rank)
    counts = _backend.kernels().same_neighbor_counts(nl.indices, lab[None, :].astype(np.uint8))
    n, m = int(lab.sum()), int((~lab).sum())
    if n < 1 or m < 1:
        raise InputError("both samples must be nonempty")
    return float(knn_from_counts(counts[0, 0], counts[0, 1], n, m, k))


def nn0_count(nl: NeighborLists, labels) -> int:
    lab = np.asarray(labels, dtype=bool)
    first = nl.indices[:, 0]
    return int(np.sum(lab & lab[first]))


def nn0_pvalue(S: int, n: int, N: int) -> float:
    p0 = (n - 1) / (N - 1)
    return float(min(1.0, stats.binom.sf(S - 1, n, p0)))


def nn0_test(dm: DistanceMatrix, labels, rank=None) -> TestResult:
    """Simple nearest-neighbor test.

    The count of x points whose nearest pooled neighbor is also from x is
    referred to Binomial(n, (n-1)/(N-1)), upper tail. The binomial model
    ignores the dependence between neighbor relations, so the p-value is
    approximate.
    """
    lab = np.asarray(labels, dtype=bool)
    n, N = int(lab.sum()), lab.size
    if n < 1 or N - n < 1:
        raise InputError("both samples must be nonempty")
    S = nn0_count(neighbor_lists(dm, 1, rank), lab)
    return TestResult("NN0", float(S), nn0_pvalue(S, n, N), PMethod.ASYMPTOTIC)


@dataclass(frozen=True)
class SpanningTree:
    edges: np.ndarray  # (N-1, 2), each row (i, j) with i < j
    weight: float
    N: int

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.N)


def mst(dm: DistanceMatrix, rank=None) -> SpanningTree:
    """Minimum spanning tree of the complete Euclidean graph.

    Candidate edges are totally ordered by (weight, smaller rank, larger
    rank), which makes the tree unique under ties.
    """
    N = dm.N
    if N < 2:
        raise InputError("a spanning tree needs at least two points")
    values = np.ascontiguousarray(dm.values, dtype=np.float64)
    edges = _backend.kernels().prim_mst(values, np.ascontiguousarray(_rank(rank, N)))
    edges = np.asarray(edges, dtype=np.int64)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    weight = float(values[edges[:, 0], edges[:, 1]].sum())
    return SpanningTree(np.ascontiguousarray(edges), weight, N)


def fr_statistic(tree: SpanningTree, labels) -> int:
    """Number of tree edges joining an x point to a y point (small = separated)."""
    lab = np.asarray(labels, dtype=bool)
    if lab.size != tree.N:
        raise InputError("labels do not cover the tree's vertices")
    return int(np.sum(lab[tree.edges[:, 0]] != lab[tree.edges[:, 1]]))


def fr_null_moments(tree: SpanningTree, n: int, m: int) -> tuple[float, float]:
    """Exact permutation mean and variance of the cross-edge count for a fixed tree.

    With p1 = P(one edge crosses), p2 = P(two edges sharing a vertex both
    cross) and p3 = P(two disjoint edges both cross):

        E[R]   = |E| p1
        E[R^2] = |E| p1 + 2 A p2 + (|E|(|E|-1) - 2A) p3

    where A is the number of unordered edge pairs that share a vertex.
    """
    N = n + m
    if N != tree.N:
        raise InputError(f"tree has {tree.N} vertices but n + m = {N}")
    if N < 4:
        raise MethodError("the cross-edge variance needs at least 4 vertices")
    E = tree.edges.shape[0]
    deg = tree.degrees()
    A = float(np.sum(deg * (deg - 1)) / 2)
    p1 = 2.0 * n * m / (N * (N - 1))
    p2 = n * m / (N * (N - 1))
    p3 = 4.0 * n * (n - 1) * m * (m - 1) / (N * (N - 1) * (N - 2) * (N - 3))
    mean = E * p1
    second = E * p1 + 2.0 * A * p2 + (E * (E - 1) - 2.0 * A) * p3
    return mean, second - mean**2


def fr_asymptotic_test(tree: SpanningTree, labels) -> TestResult:
    """Normal approximation to the cross-edge count, lower tail, continuity-corrected."""
    lab = np.asarray(labels, dtype=bool)
    n, m = int(lab.sum()), int((~lab).sum())
    R = fr_statistic(tree, lab)
    mean, var = fr_null_moments(tree, n, m)
    if var <= 0:
        p = 1.0
    else:
        p = float(stats.norm.cdf((R + 0.5 - mean) / np.sqrt(var)))
    return TestResult("FR", float(R), min(1.0, p), PMethod.ASYMPTOTIC)


def batch_cross_edges(tree: SpanningTree, labels: np.ndarray) -> np.ndarray:
    return _backend.kernels().cross_edge_counts(tree.edges, labels)


def batch_same_neighbors(nl: NeighborLists, labels: np.ndarray) -> np.ndarray:
    return _backend.kernels().same_neighbor_counts(nl.indices, labels)
