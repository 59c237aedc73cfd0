import numpy as np
import pytest

from conftest import random_pooled
from mvtwosample import _backend, _kernels_py, edf, graph
from mvtwosample import methods as M
from mvtwosample import permutation as P
from mvtwosample.core import distance_matrix

compiled = pytest.importorskip("mvtwosample._kernels")


def _labels(rng, b, N, n):
    out = np.zeros((b, N), dtype=np.uint8)
    for r in range(b):
        out[r, rng.permutation(N)[:n]] = 1
    return out


@pytest.mark.parametrize("N", [2, 7, 64, 65, 130])
def test_kernels_agree(N):
    rng = np.random.default_rng(N)
    p = random_pooled(rng, N, 3, n=max(1, N // 3), ties=True)
    dm = distance_matrix(p)
    lab = _labels(rng, 17, N, p.n)
    K = np.ascontiguousarray(np.log(np.maximum(dm.values, 1e-12)))
    a, b = _kernels_py.block_sums(K, lab), compiled.block_sums(K, lab)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-9)
    D = np.ascontiguousarray(edf.dominance(p))
    assert np.array_equal(_kernels_py.dominance_counts(D, lab), compiled.dominance_counts(D, lab))
    assert np.array_equal(_kernels_py.dominance_matrix(p.points), compiled.dominance_matrix(p.points))
    if N > 3:
        nb = np.ascontiguousarray(graph.neighbor_lists(dm, 3).indices)
        assert np.array_equal(_kernels_py.same_neighbor_counts(nb, lab), compiled.same_neighbor_counts(nb, lab))
    rank = rng.permutation(N).astype(np.int64)
    e1 = _kernels_py.prim_mst(dm.values, rank)
    e2 = compiled.prim_mst(dm.values, rank)
    assert np.array_equal(np.asarray(e1), np.asarray(e2))
    edges = np.ascontiguousarray(np.asarray(e1), dtype=np.int64)
    assert np.array_equal(_kernels_py.cross_edge_counts(edges, lab), compiled.cross_edge_counts(edges, lab))


def test_full_test_identical_pvalues():
    rng = np.random.default_rng(5)
    p = random_pooled(rng, 80, 2, n=40)
    plan = P.PermutationPlan(B=200, seed=1, methods=M.CONTINUOUS_METHODS)
    res = {}
    for b in ("python", "cython"):
        _backend.set_backend(b)
        out = P.permutation_test(p, plan)
        res[b] = {nm: (o.observed, o.p_value) for nm, o in out.methods.items()}
    _backend.set_backend("cython")
    for nm in res["python"]:
        assert res["python"][nm][0] == pytest.approx(res["cython"][nm][0], rel=1e-12, abs=1e-12)
        assert res["python"][nm][1] == res["cython"][nm][1]


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        _backend.set_backend("fortran")
