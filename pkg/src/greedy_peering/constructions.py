"""Initial topologies and the equilibrium / stable graph families.

Generators (``gen_*``) draw random initial graphs in which every node owns
``d`` out-edges.  Builders (``build_*``) are deterministic: the same
arguments always produce the same edge list.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import BadParams, Infeasible, NoStableTopology, ParityInfeasible
from .graph import GameParams, PeerGraph, TieRule
from .protocol import make_rng, step_add

log = logging.getLogger(__name__)

_GEN_ATTEMPTS = 100


# -- random initial graphs ----------------------------------------------------

def gen_random(params: GameParams, rng) -> PeerGraph:
    """Every node picks ``d`` uniform feasible peers, in a random node order.

    An unlucky order can strand a node below ``d`` (e.g. a 3-node graph with
    ``d=1`` where two nodes point at each other's only option); the draw is
    then repeated.
    """
    if params.n <= params.d:
        raise Infeasible(f"need n > d (n={params.n}, d={params.d})")
    rng = make_rng(rng)
    for _ in range(_GEN_ATTEMPTS):
        g = PeerGraph(params)
        step_add(g, rng, 0, k_add=params.d)
        if all(g.out_degree(v) == params.d for v in range(g.n)):
            return g
    raise Infeasible(f"could not give every node {params.d} out-edges in {_GEN_ATTEMPTS} attempts")


def tournament_edges(nodes: Sequence[int]) -> List[Tuple[int, int]]:
    """A clique oriented so that out-degrees differ by at most one.

    Node at position ``i`` points at positions ``i+1 .. i+(s-1)//2`` (mod s);
    for even ``s`` the first half also points across the diameter.
    """
    s = len(nodes)
    edges = []
    for i in range(s):
        for j in range(1, (s - 1) // 2 + 1):
            edges.append((nodes[i], nodes[(i + j) % s]))
        if s % 2 == 0 and i < s // 2:
            edges.append((nodes[i], nodes[i + s // 2]))
    return edges


def gen_miner_clique(params: GameParams, rng) -> PeerGraph:
    """Miners start as a clique; all remaining slots are filled at random."""
    if params.m >= 2 * params.d:
        raise BadParams("a miner clique needs m < 2d")
    rng = make_rng(rng)
    for _ in range(_GEN_ATTEMPTS):
        g = PeerGraph(params)
        for s, t in tournament_edges(range(params.m)):
            g.add_edge(s, t, 0)
        step_add(g, rng, 0, k_add=params.d)
        if all(g.out_degree(v) == params.d or len(g.neighbors(v)) == g.n - 1 for v in range(g.n)):
            return g
    raise Infeasible("could not complete the miner-clique initial graph")


def orient_undirected(params: GameParams, und: nx.Graph) -> Tuple[PeerGraph, int]:
    """Direct each undirected edge away from the endpoint with fewer out-edges.

    Ties go to the smaller id.  Edges that fit in neither direction (both
    endpoints full, or the in-cap blocks both) are dropped; the count of
    dropped edges is returned with the graph.
    """
    g = PeerGraph(params)
    dropped = 0
    for u, v in sorted((min(a, b), max(a, b)) for a, b in und.edges()):
        first, second = (u, v) if g.out_degree(u) <= g.out_degree(v) else (v, u)
        for s, t in ((first, second), (second, first)):
            if g.out_degree(s) < params.d and g.has_in_capacity(t):
                g.add_edge(s, t, 0)
                break
        else:
            dropped += 1
    if dropped:
        log.info("orientation dropped %d undirected edges", dropped)
    return g, dropped


def gen_small_world(params: GameParams, rewire_p: float, rng) -> PeerGraph:
    """Watts-Strogatz graph with ring-lattice degree ``2d``, then oriented."""
    if not 0 <= rewire_p <= 1:
        raise BadParams("rewire_p must lie in [0, 1]")
    if 2 * params.d >= params.n:
        raise Infeasible(f"ring lattice degree 2d={2 * params.d} needs n > 2d")
    rng = make_rng(rng)
    und = nx.watts_strogatz_graph(params.n, 2 * params.d, rewire_p, seed=int(rng.integers(2 ** 31)))
    return orient_undirected(params, und)[0]


def gen_scale_free(params: GameParams, seed_component: int, rng) -> PeerGraph:
    """Barabasi-Albert growth from a connected seed holding every miner.

    The seed is a complete graph when that fits the out-degree budget and a
    ring lattice of degree ``2d`` otherwise, so every seed edge can be
    oriented; each later node attaches with ``d`` edges.
    """
    n, m, d = params.n, params.m, params.d
    if seed_component < max(m, d + 1, 2) or seed_component > n:
        raise BadParams(f"seed component must hold every miner and exceed d (got {seed_component})")
    rng = make_rng(rng)
    if seed_component - 1 <= 2 * d:
        seed = nx.complete_graph(seed_component)
    else:
        seed = nx.circulant_graph(seed_component, range(1, d + 1))
    if seed_component == n:
        und = seed
    else:
        und = nx.barabasi_albert_graph(n, d, seed=int(rng.integers(2 ** 31)), initial_graph=seed)
    return orient_undirected(params, und)[0]


# -- idealized-game equilibria ---------------------------------------------------

def build_uncapped_nash(n: int, m: int, d: int) -> PeerGraph:
    """Hub miner 0; every other node points at the hub first, then at the
    lowest-indexed miners it is not yet adjacent to, up to ``d`` edges."""
    params = GameParams(n=n, m=m, d=d)
    g = PeerGraph(params)
    for v in range(1, n):
        for j in range(m):
            if g.out_degree(v) == d:
                break
            if j != v and not g.connected(v, j):
                g.add_edge(v, j)
    return g


def build_capped_unit_nash(d_in: int, k: int, k_prime: int) -> PeerGraph:
    """Miner triangle with ``d_in - 1`` complete ``d_in``-ary in-trees per corner.

    Nodes are numbered triangle first, then breadth-first by depth across
    all trees, so the miners (every tree node above depth ``k_prime``) take
    the lowest ids.  ``n = 3 * d_in**k`` and ``m = 3 * d_in**k_prime``.
    """
    if d_in < 2 or not k >= k_prime >= 0:
        raise BadParams("need d_in >= 2 and k >= k' >= 0")
    n, m = 3 * d_in ** k, 3 * d_in ** k_prime
    params = GameParams(n=n, m=m, d=1, d_in=d_in)
    g = PeerGraph(params)
    for i in range(3):
        g.add_edge(i, (i + 1) % 3)
    # level 0 = the three corners; tree depth t sits on level t + 1
    prev = [[0], [1], [2]]
    next_id = 3
    for depth in range(k):
        cur = [[], [], []]
        for corner in range(3):
            fanout = d_in - 1 if depth == 0 else d_in
            for parent in prev[corner]:
                for _ in range(fanout):
                    g.add_edge(next_id, parent)
                    cur[corner].append(next_id)
                    next_id += 1
        prev = cur
    assert next_id == n
    return g


@dataclass(frozen=True)
class ButterflyLayout:
    """Level membership of a :func:`build_capped_general_nash` graph.

    ``levels[0]`` is ``L_0`` (the layer wired into the miners); levels
    ``0..k`` form the butterfly part, deeper levels are the padding part.
    """

    k: int
    miners: Tuple[int, ...]
    levels: Tuple[Tuple[int, ...], ...]


def _butterfly_shifts(k: int, i: int, d: int) -> List[int]:
    """Shifts s for the d-2 surplus edges from L_{i+1} to L_i.

    Child ``v`` (index within its level) also points at ``(v + s) mod N``
    with ``N = |L_i|``; a shift is usable when it never lands on one of the
    child's butterfly targets.
    """
    if d == 2:
        return []
    N = 2 ** (k + i)
    block = 2 ** k
    children = np.arange(2 * N)
    grp, pos = children // block, children % block
    p1 = (grp // 2) * block + pos
    p2 = (grp // 2) * block + (pos ^ (1 << i))
    shifts = []
    for s in range(N):
        tgt = (children + s) % N
        if np.any(tgt == p1) or np.any(tgt == p2):
            continue
        shifts.append(s)
        if len(shifts) == d - 2:
            return shifts
    raise BadParams(f"level {i} has no room for {d - 2} surplus edges per node")


def build_capped_general_nash(k: int, d: int, n: Optional[int] = None) -> Tuple[PeerGraph, ButterflyLayout]:
    """Layered equilibrium for the capped game with ``m = 2**k``, ``d_in = 2d``.

    * miners: circulant core, miner ``i`` points at ``i+1 .. i+d`` (mod m);
    * ``L_0 .. L_k`` (``|L_i| = 2**(k+i)``): butterfly stages, stage
      ``L_{i+1} -> L_i`` connecting position ``x`` to ``x`` and
      ``x xor 2**i`` inside the parent group, so every ``L_k`` node has a
      directed path of length ``k`` to every ``L_0`` node; surplus edges use
      fixed cyclic shifts; ``L_0`` node ``t`` points at miners ``t .. t+d-1``;
    * padding levels ``L_{k+1}, ...`` of the same doubling sizes, each node
      pointing at ``d`` consecutive nodes of the level above; the last level
      may be partial.

    Raises :class:`BadParams` when ``m <= 2d`` (the circulant core would need
    a bidirectional pair) or ``n < 2**(3k)``.
    """
    if k < 1 or d < 2:
        raise BadParams("need k >= 1 and d >= 2")
    m = 2 ** k
    if m <= 2 * d:
        raise BadParams(f"miner core with d={d} out-edges among m={m} miners needs m > 2d")
    if n is None:
        n = 2 ** (3 * k)
    if n < 2 ** (3 * k):
        raise BadParams(f"need n >= 2**(3k) = {2 ** (3 * k)}")
    params = GameParams(n=n, m=m, d=d, d_in=2 * d)
    g = PeerGraph(params)

    for i in range(m):
        for j in range(1, d + 1):
            g.add_edge(i, (i + j) % m)

    levels: List[List[int]] = []
    next_id = m
    remaining = n - m
    lvl = 0
    while remaining > 0:
        size = min(2 ** (k + lvl), remaining)
        if lvl <= k and size < 2 ** (k + lvl):
            raise BadParams("not enough nodes for the butterfly levels")
        levels.append(list(range(next_id, next_id + size)))
        next_id += size
        remaining -= size
        lvl += 1

    for t, v in enumerate(levels[0]):
        for j in range(d):
            g.add_edge(v, (t + j) % m)

    block = 2 ** k
    for i in range(k):
        parent, child = levels[i], levels[i + 1]
        N = len(parent)
        shifts = _butterfly_shifts(k, i, d)
        for c, v in enumerate(child):
            grp, pos = divmod(c, block)
            base = (grp // 2) * block
            g.add_edge(v, parent[base + pos])
            g.add_edge(v, parent[base + (pos ^ (1 << i))])
            for s in shifts:
                g.add_edge(v, parent[(c + s) % N])

    for i in range(k + 1, len(levels)):
        parent, child = levels[i - 1], levels[i]
        N = len(parent)
        for c, v in enumerate(child):
            for s in range(d):
                g.add_edge(v, parent[(c + s) % N])

    layout = ButterflyLayout(k, tuple(range(m)), tuple(tuple(lv) for lv in levels))
    return g, layout


def audit_butterfly(g: PeerGraph, layout: ButterflyLayout) -> List[str]:
    """Structural checks for :func:`build_capped_general_nash` output.

    Every ``L_k`` node must reach every ``L_0`` node along a directed path
    of exactly ``k`` edges, and every miner and every node above the
    deepest level must have in-degree ``2d``.
    """
    problems = list(g.audit())
    k, d = layout.k, g.d
    top = set(layout.levels[0])
    for v in layout.levels[k]:
        frontier = {v}
        for _ in range(k):
            frontier = {t for u in frontier for t in g.out_edges[u]}
        missing = top - frontier
        if missing:
            problems.append(f"L_k node {v} misses {len(missing)} L_0 nodes in {k} hops")
    # a partial deepest level leaves spare capacity in the level above it
    depth = len(layout.levels) - 1
    complete = len(layout.levels[-1]) == 2 ** (k + depth)
    upper = layout.levels[:-1] if complete else layout.levels[:-2]
    full = list(layout.miners) + [v for lv in upper for v in lv]
    for v in full:
        if g.in_degree(v) != 2 * d:
            problems.append(f"node {v} in-degree {g.in_degree(v)} != {2 * d}")
    return problems


# -- stable topologies for the greedy protocol -------------------------------------

def special_count(m: int, d: int) -> int:
    """Number of score-1 non-miners in the ``d <= m < 2d`` stable topology.

    Each miner has ``r = d - 1 - (m-1)/2`` edges left after the clique and
    each special non-miner must touch all ``m`` miners while owning ``d - 1``
    edges itself, so ``n' (m - d + 1) = m r``.
    """
    if not d <= m < 2 * d:
        raise BadParams(f"special non-miners only arise for d <= m < 2d (m={m}, d={d})")
    if m % 2 == 0:
        raise ParityInfeasible(f"a regular miner tournament needs odd m (m={m})")
    r = d - 1 - (m - 1) // 2
    num, den = m * r, m - d + 1
    if r < 0 or num % den:
        raise ParityInfeasible(f"n' = {num}/{den} is not a non-negative integer (m={m}, d={d})")
    return num // den


def _fill_lowest(g: PeerGraph, v: int, candidates, limit: int) -> None:
    for t in candidates:
        if g.out_degree(v) >= limit:
            return
        if t != v and not g.connected(v, t):
            g.add_edge(v, t)


def build_stable_topology(n: int, m: int, d: int, tie_rule=TieRule.LIFO) -> PeerGraph:
    """A post-drop snapshot (every node at ``d - 1`` out-edges or adjacent to
    everyone) of a stable topology for the greedy protocol.

    * ``m < d``: miner clique; miners spend leftover edges on the first
      non-miners; every non-miner points at the miners not pointing at it
      and then at the lowest non-adjacent non-miners;
    * ``d <= m < 2d``: a regular miner tournament; leftover miner edges go
      round-robin to ``n'`` special non-miners (:func:`special_count`) which
      point at the remaining miners; all other non-miners point at the first
      ``d - 1`` miners;
    * ``m >= 2d`` (LIFO / global ordering only, miner-stable only): miners
      ``0 .. d-2`` form a core clique that all other miners point at; core
      leftovers go to the first non-miners; non-miners point at the core.
    """
    tie_rule = TieRule.parse(tie_rule)
    params = GameParams(n=n, m=m, d=d, tie_rule=tie_rule)
    g = PeerGraph(params)
    miners = list(range(m))
    others = list(range(m, n))
    cap = d - 1

    if m < d:
        for s, t in tournament_edges(miners):
            g.add_edge(s, t)
        for v in miners:
            _fill_lowest(g, v, others, cap)
        for v in others:
            _fill_lowest(g, v, miners, cap)
            _fill_lowest(g, v, others, cap)
        return g

    if m < 2 * d:
        n_special = special_count(m, d)
        if m + n_special > n:
            raise ParityInfeasible(f"need n >= m + n' = {m + n_special}")
        for s, t in tournament_edges(miners):
            g.add_edge(s, t)
        r = cap - (m - 1) // 2
        for i in miners:
            for t in range(r):
                g.add_edge(i, m + (i * r + t) % n_special)
        for v in others:
            _fill_lowest(g, v, miners, cap)
        return g

    if tie_rule in (TieRule.FIFO, TieRule.RANDOM):
        raise NoStableTopology(f"no miner-stable topology for m >= 2d under {tie_rule.value}")
    core = miners[:cap]
    for s, t in tournament_edges(core):
        g.add_edge(s, t)
    for v in miners[cap:]:
        _fill_lowest(g, v, core, cap)
    for v in core:
        _fill_lowest(g, v, others, cap)
    for v in others:
        _fill_lowest(g, v, core, cap)
        _fill_lowest(g, v, miners, cap)
    return g


TOPOLOGIES = ("random", "small-world", "scale-free", "miner-clique")


def generate(topology: str, params: GameParams, rng, rewire_p: float = 0.5,
             seed_component: int = 20) -> PeerGraph:
    if topology == "random":
        return gen_random(params, rng)
    if topology == "small-world":
        return gen_small_world(params, rewire_p, rng)
    if topology == "scale-free":
        return gen_scale_free(params, seed_component, rng)
    if topology == "miner-clique":
        return gen_miner_clique(params, rng)
    raise BadParams(f"unknown topology {topology!r}")
