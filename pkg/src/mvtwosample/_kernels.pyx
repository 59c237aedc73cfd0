# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops over a fixed pooled sample and a batch of labelings.

Every batch kernel takes ``labels`` as a ``(b, N)`` uint8 array (1 = x) and
releases the GIL, so permutation chunks can run on several threads.
"""

import numpy as np
cimport numpy as cnp
from scipy.linalg cimport cython_blas as blas

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

cnp.import_array()

BACKEND = "cython"


def block_sums(const double[:, ::1] K, const unsigned char[:, ::1] labels):
    """Sums of ``K[i, j]`` over pairs i < j, split by the labels of i and j.

    ``K`` must be symmetric with a zero diagonal. Returns a ``(b, 3)`` array
    with columns (x-x, y-y, x-y). The products ``K @ labels.T`` go through
    BLAS; the label-weighted reductions run without the GIL.
    """
    cdef Py_ssize_t b = labels.shape[0], N = labels.shape[1]
    cdef Py_ssize_t r, i
    cdef double sxx, sxy, syy, v, t
    out_arr = np.zeros((b, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if b == 0 or N == 0:
        return out_arr
    # column-major (N, b) label matrix and product buffer for dgemm
    lab_arr = np.asfortranarray(np.asarray(labels, dtype=np.float64).T)
    prod_arr = np.empty((N, b), dtype=np.float64, order="F")
    tot_arr = np.asarray(K).sum(axis=1)
    cdef double[::1, :] lab = lab_arr
    cdef double[::1, :] prod = prod_arr
    cdef const double[::1] tot = tot_arr
    cdef int nn = <int>N, bb = <int>b
    cdef double one = 1.0, zero = 0.0
    cdef char trans = b"N"
    with nogil:
        # K is symmetric, so its C-order buffer read as column-major is K itself
        blas.dgemm(&trans, &trans, &nn, &bb, &nn, &one, <double*>&K[0, 0], &nn,
                   &lab[0, 0], &nn, &zero, &prod[0, 0], &nn)
        for r in range(b):
            sxx = 0.0
            sxy = 0.0
            syy = 0.0
            for i in range(N):
                v = prod[i, r]
                t = tot[i]
                if labels[r, i]:
                    sxx = sxx + v
                    sxy = sxy + (t - v)
                else:
                    syy = syy + (t - v)
            out[r, 0] = 0.5 * sxx
            out[r, 1] = 0.5 * syy
            out[r, 2] = sxy
    return out_arr


cdef inline Py_ssize_t _words(Py_ssize_t N) nogil:
    return (N + 63) // 64


cdef void _pack_rows(const unsigned char[:, ::1] src, unsigned long long[:, ::1] dst) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(src.shape[0]):
        for j in range(dst.shape[1]):
            dst[i, j] = 0
        for j in range(src.shape[1]):
            if src[i, j]:
                dst[i, j >> 6] |= (<unsigned long long>1) << (j & 63)


def dominance_counts(const unsigned char[:, ::1] D, const unsigned char[:, ::1] labels):
    """``counts[r, i]`` = number of x points (under labeling r) dominated by point i.

    Rows of ``D`` and the labelings are packed into 64-bit words and counted
    with popcount.
    """
    cdef Py_ssize_t b = labels.shape[0], N = labels.shape[1]
    cdef Py_ssize_t W = _words(N)
    cdef Py_ssize_t r, i, w
    cdef long long c
    out_arr = np.zeros((b, N), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    dbits_arr = np.empty((N, W), dtype=np.uint64)
    lbits_arr = np.empty((b, W), dtype=np.uint64)
    cdef unsigned long long[:, ::1] dbits = dbits_arr
    cdef unsigned long long[:, ::1] lbits = lbits_arr
    if N == 0:
        return out_arr
    with nogil:
        _pack_rows(D, dbits)
        _pack_rows(labels, lbits)
        for r in range(b):
            for i in range(N):
                c = 0
                for w in range(W):
                    c = c + __builtin_popcountll(dbits[i, w] & lbits[r, w])
                out[r, i] = c
    return out_arr


def same_neighbor_counts(const long long[:, ::1] nbrs, const unsigned char[:, ::1] labels):
    """Per labeling: (same-sample neighbors summed over x points, same over y points)."""
    cdef Py_ssize_t b = labels.shape[0], N = nbrs.shape[0], k = nbrs.shape[1]
    cdef Py_ssize_t r, i, t
    cdef long long cx, cy, c
    cdef unsigned char li
    out_arr = np.zeros((b, 2), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    with nogil:
        for r in range(b):
            cx = 0
            cy = 0
            for i in range(N):
                li = labels[r, i]
                c = 0
                for t in range(k):
                    if labels[r, nbrs[i, t]] == li:
                        c = c + 1
                if li:
                    cx = cx + c
                else:
                    cy = cy + c
            out[r, 0] = cx
            out[r, 1] = cy
    return out_arr


def cross_edge_counts(const long long[:, ::1] edges, const unsigned char[:, ::1] labels):
    """Number of edges whose endpoints carry different labels, per labeling."""
    cdef Py_ssize_t b = labels.shape[0], E = edges.shape[0]
    cdef Py_ssize_t r, e
    cdef long long c
    out_arr = np.zeros(b, dtype=np.int64)
    cdef long long[::1] out = out_arr
    with nogil:
        for r in range(b):
            c = 0
            for e in range(E):
                if labels[r, edges[e, 0]] != labels[r, edges[e, 1]]:
                    c = c + 1
            out[r] = c
    return out_arr


def dominance_matrix(const double[:, ::1] points):
    """``D[i, j] = 1`` iff point j is componentwise <= point i."""
    cdef Py_ssize_t N = points.shape[0], d = points.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double v
    # coordinate-major copy so the inner loop over j is contiguous and branch-free
    cols_arr = np.ascontiguousarray(np.asarray(points).T)
    cdef const double[:, ::1] cols = cols_arr
    out_arr = np.ones((N, N), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    with nogil:
        for i in range(N):
            for k in range(d):
                v = cols[k, i]
                for j in range(N):
                    out[i, j] &= cols[k, j] <= v
    return out_arr


cdef inline bint _edge_less(double w1, long long a1, long long b1,
                            double w2, long long a2, long long b2) nogil:
    if w1 != w2:
        return w1 < w2
    if a1 != a2:
        return a1 < a2
    return b1 < b2


def prim_mst(const double[:, ::1] dist, const long long[::1] rank):
    """Minimum spanning tree of the complete graph under the total edge order
    (weight, min rank, max rank). Returns an ``(N-1, 2)`` edge array."""
    cdef Py_ssize_t N = dist.shape[0]
    cdef Py_ssize_t step, v, best, u
    cdef long long lo, hi, blo, bhi, clo, chi
    edges_arr = np.zeros((max(N - 1, 0), 2), dtype=np.int64)
    cdef long long[:, ::1] edges = edges_arr
    in_tree_arr = np.zeros(N, dtype=np.uint8)
    cdef unsigned char[::1] in_tree = in_tree_arr
    best_w_arr = np.full(N, np.inf)
    cdef double[::1] best_w = best_w_arr
    src_arr = np.zeros(N, dtype=np.int64)
    cdef long long[::1] src = src_arr
    if N < 2:
        return edges_arr
    with nogil:
        in_tree[0] = 1
        for v in range(1, N):
            best_w[v] = dist[0, v]
            src[v] = 0
        for step in range(N - 1):
            best = -1
            for v in range(N):
                if in_tree[v]:
                    continue
                if best < 0:
                    best = v
                    continue
                lo = min(rank[v], rank[src[v]])
                hi = max(rank[v], rank[src[v]])
                blo = min(rank[best], rank[src[best]])
                bhi = max(rank[best], rank[src[best]])
                if _edge_less(best_w[v], lo, hi, best_w[best], blo, bhi):
                    best = v
            in_tree[best] = 1
            if src[best] < best:
                edges[step, 0] = src[best]
                edges[step, 1] = best
            else:
                edges[step, 0] = best
                edges[step, 1] = src[best]
            u = best
            for v in range(N):
                if in_tree[v]:
                    continue
                clo = min(rank[v], rank[src[v]])
                chi = max(rank[v], rank[src[v]])
                lo = min(rank[v], rank[u])
                hi = max(rank[v], rank[u])
                if _edge_less(dist[u, v], lo, hi, best_w[v], clo, chi):
                    best_w[v] = dist[u, v]
                    src[v] = u
    return edges_arr
