# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled BFS kernels over an undirected CSR adjacency."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def bfs_multi(const cnp.int32_t[::1] indptr, const cnp.int32_t[::1] indices,
              int n, const cnp.int32_t[::1] sources, int excluded=-1):
    """Hop distances from each source; unreachable nodes get ``n``.

    ``excluded`` (if >= 0) is treated as deleted from the graph.
    """
    cdef Py_ssize_t ns = sources.shape[0]
    out = np.full((ns, n), n, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] dist = out
    cdef cnp.int32_t[::1] queue = np.empty(n, dtype=np.int32)
    cdef Py_ssize_t s, head, tail, e
    cdef int src, u, w, du
    for s in range(ns):
        src = sources[s]
        if src == excluded:
            continue
        dist[s, src] = 0
        queue[0] = src
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[s, u] + 1
            for e in range(indptr[u], indptr[u + 1]):
                w = indices[e]
                if w != excluded and dist[s, w] == n:
                    dist[s, w] = du
                    queue[tail] = w
                    tail += 1
    return out
