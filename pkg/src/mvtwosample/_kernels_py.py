"""Numpy implementations of the batch kernels in ``_kernels.pyx``.

Same signatures and return types; most loops become matrix products.
"""

import numpy as np

BACKEND = "python"


def block_sums(K, labels):
    lx = labels.astype(np.float64)
    ly = 1.0 - lx
    Kx = lx @ K
    Ky = ly @ K
    out = np.empty((labels.shape[0], 3))
    # K has a zero diagonal, so full quadratic forms double-count each pair
    out[:, 0] = 0.5 * np.einsum("ij,ij->i", Kx, lx)
    out[:, 1] = 0.5 * np.einsum("ij,ij->i", Ky, ly)
    out[:, 2] = np.einsum("ij,ij->i", Kx, ly)
    return out


def dominance_counts(D, labels):
    prod = labels.astype(np.float64) @ D.T.astype(np.float64)
    return np.rint(prod).astype(np.int64)


def same_neighbor_counts(nbrs, labels):
    lab = labels.astype(bool)
    same = lab[:, nbrs] == lab[:, :, None]
    per_point = same.sum(axis=2)
    cx = np.where(lab, per_point, 0).sum(axis=1)
    cy = np.where(lab, 0, per_point).sum(axis=1)
    return np.stack([cx, cy], axis=1).astype(np.int64)


def cross_edge_counts(edges, labels):
    if edges.shape[0] == 0:
        return np.zeros(labels.shape[0], dtype=np.int64)
    return (labels[:, edges[:, 0]] != labels[:, edges[:, 1]]).sum(axis=1).astype(np.int64)


def dominance_matrix(points):
    N = points.shape[0]
    out = np.ones((N, N), dtype=bool)
    for k in range(points.shape[1]):
        col = points[:, k]
        out &= col[None, :] <= col[:, None]
    return out.astype(np.uint8)


def prim_mst(dist, rank):
    N = dist.shape[0]
    edges = np.zeros((max(N - 1, 0), 2), dtype=np.int64)
    if N < 2:
        return edges
    rank = np.asarray(rank, dtype=np.int64)
    in_tree = np.zeros(N, dtype=bool)
    in_tree[0] = True
    best_w = dist[0].astype(float).copy()
    src = np.zeros(N, dtype=np.int64)
    for step in range(N - 1):
        out = np.flatnonzero(~in_tree)
        r_v, r_s = rank[out], rank[src[out]]
        lo, hi = np.minimum(r_v, r_s), np.maximum(r_v, r_s)
        pick = np.lexsort((hi, lo, best_w[out]))[0]
        v = out[pick]
        s = src[v]
        edges[step] = (min(s, v), max(s, v))
        in_tree[v] = True
        out = np.flatnonzero(~in_tree)
        if out.size == 0:
            break
        w_new = dist[v, out]
        r_v = rank[out]
        lo_new = np.minimum(r_v, rank[v])
        hi_new = np.maximum(r_v, rank[v])
        r_s = rank[src[out]]
        lo_old = np.minimum(r_v, r_s)
        hi_old = np.maximum(r_v, r_s)
        w_old = best_w[out]
        better = (w_new < w_old) | (
            (w_new == w_old) & ((lo_new < lo_old) | ((lo_new == lo_old) & (hi_new < hi_old)))
        )
        upd = out[better]
        best_w[upd] = w_new[better]
        src[upd] = v
    return edges
