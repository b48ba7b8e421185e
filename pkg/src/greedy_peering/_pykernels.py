"""Pure-Python fallback for the compiled BFS kernels."""

from collections import deque

import numpy as np


def bfs_multi(indptr, indices, n, sources, excluded=-1):
    """Hop distances from each source; unreachable nodes get ``n``.

    ``excluded`` (if >= 0) is treated as deleted from the graph.
    """
    ptr = indptr.tolist()
    idx = indices.tolist()
    adj = [idx[ptr[v]:ptr[v + 1]] for v in range(n)]
    out = np.full((len(sources), n), n, dtype=np.int32)
    for row, src in enumerate(np.asarray(sources).tolist()):
        if src == excluded:
            continue
        dist = [n] * n
        dist[src] = 0
        if excluded >= 0:
            dist[excluded] = -1
        queue = deque([src])
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for w in adj[u]:
                if dist[w] == n:
                    dist[w] = du
                    queue.append(w)
        if excluded >= 0:
            dist[excluded] = n
        out[row] = dist
    return out
