"""Reference implementations used only by the tests.

They share no code with the package: distances come from a dense
Floyd-Warshall over an adjacency matrix built straight from edge pairs.
"""

import itertools
from fractions import Fraction

import numpy as np


def floyd_warshall(n, pairs):
    """All-pairs undirected hop distances, unreachable pairs set to ``n``."""
    inf = 10 ** 9
    dist = np.full((n, n), inf, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    for a, b in pairs:
        dist[a, b] = dist[b, a] = 1
    for k in range(n):
        dist = np.minimum(dist, dist[:, k:k + 1] + dist[k:k + 1, :])
    dist[dist >= inf] = n
    return dist


def directed_pairs(g):
    return [(s, t) for s in range(g.n) for t in g.out_edges[s]]


def oracle_score(dist, node, m, weights=None):
    if weights is None:
        weights = [Fraction(1, m)] * m
    return sum((Fraction(weights[j]) * int(dist[node, j]) for j in range(m)), Fraction(0))


def oracle_scores(g, weights=None):
    dist = floyd_warshall(g.n, directed_pairs(g))
    return [oracle_score(dist, v, g.m, weights) for v in range(g.n)]


def brute_force_deviation(g, u, capped=False, max_size=None):
    """Best strictly improving action of node ``u``, or ``None``.

    Re-solves all-pairs distances from scratch for every candidate set.
    """
    n, m = g.n, g.m
    d = g.d if max_size is None else max_size
    others = [(s, t) for (s, t) in directed_pairs(g) if s != u]
    feasible = []
    for x in range(n):
        if x == u or u in g.out_edges[x]:
            continue
        if capped and g.params.d_in is not None:
            indeg = sum(1 for (s, t) in others if t == x)
            if indeg >= g.params.d_in:
                continue
        feasible.append(x)
    current = tuple(sorted(g.out_edges[u]))
    old = oracle_score(floyd_warshall(n, others + [(u, x) for x in current]), u, m)
    best = None
    for size in range(d + 1):
        for action in itertools.combinations(feasible, size):
            new = oracle_score(floyd_warshall(n, others + [(u, x) for x in action]), u, m)
            if new < old and (best is None or new < best[1]):
                best = (action, new)
    return old, best
