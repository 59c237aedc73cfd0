import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.csgraph import minimum_spanning_tree

import oracles
from conftest import random_pooled
from mvtwosample import graph
from mvtwosample.core import DistanceMatrix, InputError, MethodError, PooledSample, distance_matrix


def _dm(points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    lab = np.zeros(len(pts), bool)
    lab[0] = True
    return distance_matrix(PooledSample(pts, lab))


def test_neighbor_lists_basic():
    dm = _dm([0, 1, 3, 7])
    nl = graph.neighbor_lists(dm, 2)
    assert nl.indices.tolist() == [[1, 2], [0, 2], [1, 0], [2, 1]]
    with pytest.raises(InputError):
        graph.neighbor_lists(dm, 4)


def test_neighbor_ties_by_index_or_rank():
    dm = _dm([0, -1, 1])  # point 0 has two neighbors at distance 1
    assert graph.neighbor_lists(dm, 1).indices[0, 0] == 1
    assert graph.neighbor_lists(dm, 1, rank=[0, 2, 1]).indices[0, 0] == 2


def test_knn_examples():
    pts = [[0, 0], [0, 0.1], [0.1, 0], [10, 10], [10, 10.1], [10.1, 10]]
    lab = np.array([1, 1, 1, 0, 0, 0], bool)
    assert graph.knn_statistic(_dm(pts), lab, 1) == 2.0
    line = [[0, 0], [2, 0], [1, 0], [3, 0]]
    assert graph.knn_statistic(_dm(line), np.array([1, 1, 0, 0], bool), 1) == 0.0


@pytest.mark.parametrize("k", [1, 3, 5])
def test_knn_against_oracle(backend, k):
    rng = np.random.default_rng(k)
    for _ in range(20):
        N = int(rng.integers(k + 1, 13))
        p = random_pooled(rng, N, int(rng.choice([1, 2, 5])), ties=bool(rng.integers(2)))
        rank = rng.permutation(N) if rng.integers(2) else None
        got = graph.knn_statistic(distance_matrix(p), p.labels, k, rank)
        assert got == pytest.approx(oracles.knn(p.points.tolist(), p.labels.tolist(), k, rank), rel=1e-12)
        assert 0.0 <= got <= 2.0


def test_nn0_examples():
    pts = [[0, 0], [0, 0.1], [0.1, 0], [5, 5], [6, 6], [7, 7]]
    res = graph.nn0_test(_dm(pts), np.array([1, 1, 1, 0, 0, 0], bool))
    assert res.statistic == 3 and res.p_value == pytest.approx(0.4**3)
    res = graph.nn0_test(_dm([[0, 0], [1, 0], [2, 0]]), np.array([1, 0, 0], bool))
    assert res.statistic == 0 and res.p_value == 1.0
    line = [[0, 0], [2, 0], [1, 0], [3, 0]]
    res = graph.nn0_test(_dm(line), np.array([1, 1, 0, 0], bool))
    assert res.statistic == 0 and res.p_value == 1.0


def test_nn0_against_oracle(rng):
    for _ in range(20):
        p = random_pooled(rng, int(rng.integers(3, 12)), 2)
        nl = graph.neighbor_lists(distance_matrix(p), 1)
        assert graph.nn0_count(nl, p.labels) == oracles.nn0(p.points.tolist(), p.labels.tolist())


def test_mst_examples(backend):
    t = graph.mst(_dm([0, 1, 3]))
    assert t.edges.tolist() == [[0, 1], [1, 2]] and t.weight == 3.0
    t = graph.mst(_dm([0, 2]))
    assert t.edges.tolist() == [[0, 1]]


@pytest.mark.parametrize("d", [1, 2, 5])
def test_mst_against_kruskal_and_scipy(backend, d):
    rng = np.random.default_rng(40 + d)
    for _ in range(15):
        N = int(rng.integers(2, 13))
        p = random_pooled(rng, N, d, ties=bool(rng.integers(2)))
        dm = distance_matrix(p)
        rank = rng.permutation(N) if rng.integers(2) else None
        t = graph.mst(dm, rank)
        assert [tuple(e) for e in t.edges.tolist()] == oracles.kruskal(p.points.tolist(), rank)
        if np.all(dm.values[np.triu_indices(N, 1)] > 0):
            ref = minimum_spanning_tree(dm.values).sum()
            assert t.weight == pytest.approx(ref, rel=1e-12)


def test_mst_deterministic_and_backend_equal(rng):
    from mvtwosample import _backend

    p = random_pooled(rng, 40, 2, ties=True)
    dm = distance_matrix(p)
    trees = []
    for b in _backend.available():
        _backend.set_backend(b)
        trees.append(graph.mst(dm).edges)
        trees.append(graph.mst(dm).edges)
    _backend.set_backend(_backend.available()[0])
    assert all(np.array_equal(trees[0], t) for t in trees)


def test_fr_examples():
    pts = [[0, 0], [0, 0.1], [0.1, 0], [10, 10], [10, 10.1], [10.1, 10]]
    t = graph.mst(_dm(pts))
    assert graph.fr_statistic(t, np.array([1, 1, 1, 0, 0, 0], bool)) == 1
    assert graph.fr_statistic(t, np.ones(6, bool)) == 0
    t = graph.mst(_dm([0, 1, 2, 3]))
    assert graph.fr_statistic(t, np.array([1, 0, 1, 0], bool)) == 3


def _tree(edges, N):
    e = np.array(sorted(edges), dtype=np.int64)
    return graph.SpanningTree(e, float(len(e)), N)


def test_fr_moments_small_trees():
    path = _tree([(0, 1), (1, 2), (2, 3)], 4)
    mean, var = graph.fr_null_moments(path, 2, 2)
    assert mean == pytest.approx(2.0)
    assert (mean, var) == pytest.approx(oracles.enumerate_moments(path.edges.tolist(), 4, 2), rel=1e-12)
    star = _tree([(0, 1), (0, 2), (0, 3), (0, 4)], 5)
    assert graph.fr_null_moments(star, 2, 3) == pytest.approx(oracles.enumerate_moments(star.edges.tolist(), 5, 2))
    with pytest.raises(MethodError):
        graph.fr_null_moments(_tree([(0, 1), (1, 2)], 3), 1, 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 9), st.data())
def test_fr_moments_match_enumeration(N, data):
    # random labeled tree from a Pruefer-like parent sequence
    parents = [data.draw(st.integers(0, v - 1)) for v in range(1, N)]
    tree = _tree([(p, v) for v, p in zip(range(1, N), parents)], N)
    n = data.draw(st.integers(1, N - 1))
    mean, var = graph.fr_null_moments(tree, n, N - n)
    em, ev = oracles.enumerate_moments(tree.edges.tolist(), N, n)
    assert abs(mean - em) <= 1e-10 * max(1, em)
    assert abs(var - ev) <= 1e-10 * max(1, ev)


def test_fr_mean_for_equal_sizes():
    for N in (4, 6, 8):
        tree = _tree([(i, i + 1) for i in range(N - 1)], N)
        assert graph.fr_null_moments(tree, N // 2, N // 2)[0] == pytest.approx(N / 2)


def test_fr_asymptotic_pvalue_lower_tail(rng):
    p = random_pooled(rng, 30, 2, n=15)
    t = graph.mst(distance_matrix(p))
    res = graph.fr_asymptotic_test(t, p.labels)
    assert res.p_method.value == "asymptotic" and 0 <= res.p_value <= 1


def test_structures_follow_points_under_relabeling(backend, rng):
    p = random_pooled(rng, 11, 2, n=5)
    perm = rng.permutation(11)
    q = PooledSample(p.points[perm], p.labels[perm])
    for k in (1, 3):
        a = graph.knn_statistic(distance_matrix(p), p.labels, k)
        b = graph.knn_statistic(distance_matrix(q), q.labels, k)
        assert a == pytest.approx(b)
    a = graph.fr_statistic(graph.mst(distance_matrix(p)), p.labels)
    b = graph.fr_statistic(graph.mst(distance_matrix(q)), q.labels)
    assert a == b
