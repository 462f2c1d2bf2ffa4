# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pairwise-distance and threshold-linkage kernels.

Mirrors :mod:`kgaffinity._pykernels` function for function.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long x) nogil


cdef inline int64_t _find(int64_t[::1] parent, int64_t x) noexcept nogil:
    cdef int64_t root = x
    while parent[root] != root:
        root = parent[root]
    cdef int64_t nxt
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


cdef inline void _union(int64_t[::1] parent, int64_t a, int64_t b) noexcept nogil:
    cdef int64_t ra = _find(parent, a)
    cdef int64_t rb = _find(parent, b)
    if ra == rb:
        return
    if ra < rb:
        parent[rb] = ra
    else:
        parent[ra] = rb


cdef object _relabel(int64_t[::1] parent, Py_ssize_t n):
    labels = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] lab = labels
    root_label = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] rl = root_label
    cdef int64_t nxt = 0
    cdef Py_ssize_t i
    cdef int64_t r
    for i in range(n):
        r = _find(parent, i)
        if rl[r] < 0:
            rl[r] = nxt
            nxt += 1
        lab[i] = rl[r]
    return labels


def jaccard_matrix(const uint64_t[:, ::1] words):
    cdef Py_ssize_t n = words.shape[0]
    cdef Py_ssize_t w = words.shape[1]
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] d = out
    counts = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] c = counts
    cdef Py_ssize_t i, j, k
    cdef int64_t inter, union
    with nogil:
        for i in range(n):
            for k in range(w):
                c[i] += __builtin_popcountll(words[i, k])
        for i in range(n):
            for j in range(i + 1, n):
                inter = 0
                for k in range(w):
                    inter += __builtin_popcountll(words[i, k] & words[j, k])
                union = c[i] + c[j] - inter
                if union == 0:
                    d[i, j] = 0.0
                else:
                    d[i, j] = 1.0 - <double>inter / <double>union
                d[j, i] = d[i, j]
    return out


def cosine_matrix(const double[:, ::1] X):
    # the Gram matrix comes from BLAS; the loop only normalizes and clips
    cdef Py_ssize_t n = X.shape[0]
    G = np.asarray(X) @ np.asarray(X).T
    cdef double[:, ::1] g = G
    cdef double[::1] nr = np.sqrt(np.ascontiguousarray(np.diagonal(G)))
    cdef Py_ssize_t i, j
    cdef double v
    with nogil:
        for i in range(n):
            g[i, i] = 0.0
            for j in range(i + 1, n):
                if nr[i] == 0.0 and nr[j] == 0.0:
                    v = 0.0
                elif nr[i] == 0.0 or nr[j] == 0.0:
                    v = 1.0
                else:
                    v = 1.0 - g[i, j] / (nr[i] * nr[j])
                    if v < 0.0:
                        v = 0.0
                g[i, j] = v
                g[j, i] = v
    return G


def threshold_components(const double[:, ::1] D, double gamma):
    cdef Py_ssize_t n = D.shape[0]
    parent = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] p = parent
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                if D[i, j] < gamma:
                    _union(p, i, j)
    return _relabel(p, n)


def jaccard_components(const uint64_t[:, ::1] words, double gamma):
    """Threshold linkage on Jaccard distance without materializing the matrix."""
    cdef Py_ssize_t n = words.shape[0]
    cdef Py_ssize_t w = words.shape[1]
    parent = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] p = parent
    counts = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] c = counts
    cdef Py_ssize_t i, j, k
    cdef int64_t inter, union
    cdef double dist
    with nogil:
        for i in range(n):
            for k in range(w):
                c[i] += __builtin_popcountll(words[i, k])
        for i in range(n):
            for j in range(i + 1, n):
                if _find(p, i) == _find(p, j):
                    continue
                inter = 0
                for k in range(w):
                    inter += __builtin_popcountll(words[i, k] & words[j, k])
                union = c[i] + c[j] - inter
                dist = 0.0 if union == 0 else 1.0 - <double>inter / <double>union
                if dist < gamma:
                    _union(p, i, j)
    return _relabel(p, n)
