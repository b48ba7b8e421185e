"""Equilibrium and stability analysis.

* :func:`verify_nash` -- best-response check for the idealized game, where
  every node may choose any set of at most ``d`` out-neighbours.
* :func:`check_structural_stability` -- sufficient structural conditions
  for stability under the greedy protocol.
* :func:`empirical_stability` -- finite-window proxy for edge stability.
  It is a reporting aid only: stability is defined over an infinite future.
* :func:`regime_oracle` -- which stability notions are known to be
  achievable for given parameters.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetExceeded, HistoryTooShort
from .graph import PeerGraph, TieRule
from .kernels import bfs_multi
from .metrics import all_scores, diameter, prepare_weights

DEFAULT_WINDOW = 64

# combinations evaluated per vectorised batch in verify_nash
_BATCH = 4096


# -- Nash verification --------------------------------------------------------

class NashMode(enum.Enum):
    EXHAUSTIVE = "exhaustive"
    SINGLE_SWAP = "single_swap"

    @classmethod
    def parse(cls, value) -> "NashMode":
        if isinstance(value, NashMode):
            return value
        key = str(value).strip().lower().replace("-", "_")
        if key in ("singleswap", "swap"):
            key = "single_swap"
        return cls(key)


@dataclass(frozen=True)
class NashWitness:
    node: int
    action: Tuple[int, ...]
    old_score: Fraction
    new_score: Fraction


@dataclass(frozen=True)
class NashVerdict:
    is_nash: bool
    witness: Optional[NashWitness]
    mode: NashMode
    actions_examined: int

    def report(self) -> str:
        lines = [
            f"is_nash={str(self.is_nash).lower()}",
            f"mode={self.mode.value}",
            f"actions_examined={self.actions_examined}",
        ]
        if self.witness is not None:
            w = self.witness
            lines += [
                f"witness_node={w.node}",
                f"witness_action={','.join(map(str, w.action))}",
                f"old_score={w.old_score}",
                f"new_score={w.new_score}",
            ]
        return "\n".join(lines)


class _NodeScorer:
    """Score of ``u`` for any choice of out-neighbours, all else fixed.

    With ``D`` the miner distances in ``G - u``, giving ``u`` the neighbour
    set ``N`` puts it at ``1 + min_{x in N} D[j, x]`` from miner ``j``.
    In-neighbours of ``u`` are always part of ``N``.
    """

    def __init__(self, g: PeerGraph, u: int, w):
        indptr, indices = g.undirected_csr()
        n, m = g.n, g.m
        self.n = n
        self.u = u
        self.w = w
        D = bfs_multi(indptr, indices, n, np.arange(m, dtype=np.int32), excluded=u)
        self.D = D.astype(np.int64)
        ins = sorted(g.in_nbrs[u])
        if ins:
            self.base = self.D[:, ins].min(axis=1)
        else:
            self.base = np.full(m, n, dtype=np.int64)
        self.self_col = u if u < m else None

    def numerators(self, combos: np.ndarray):
        """Score numerators for a batch of actions (rows of ``combos``)."""
        m = self.D.shape[0]
        if combos.shape[1] == 0:
            best = np.broadcast_to(self.base[:, None], (m, combos.shape[0]))
        else:
            best = np.minimum(self.D[:, combos].min(axis=2), self.base[:, None])
        dist = np.minimum(best + 1, self.n)
        if self.self_col is not None:
            dist = dist.copy()
            dist[self.self_col, :] = 0
        return self.w.weighted_sums(np.ascontiguousarray(dist.T))


def _feasible_targets(g: PeerGraph, u: int, capped: bool) -> List[int]:
    out = g.out_edges[u]
    d_in = g.params.d_in
    targets = []
    for x in range(g.n):
        if x == u or x in g.in_nbrs[u]:
            continue
        if capped and d_in is not None and g.in_degree(x) - (x in out) >= d_in:
            continue
        targets.append(x)
    return targets


def _exhaustive_actions(targets: Sequence[int], d: int):
    for size in range(d + 1):
        yield size, itertools.combinations(targets, size)


def _swap_actions(current: Sequence[int], targets: Sequence[int], d: int) -> List[np.ndarray]:
    """Batches of one-edge deviations: drops, then replacements, then additions."""
    cur = np.array(current, dtype=np.int64)
    new = np.array([x for x in targets if x not in set(current)], dtype=np.int64)
    k = len(cur)
    batches = []
    if k:
        rests = np.array([np.delete(cur, i) for i in range(k)], dtype=np.int64).reshape(k, k - 1)
        batches.append(rests)
        if new.size:
            reps = np.repeat(rests, new.size, axis=0)
            fresh = np.tile(new, k)[:, None]
            batches.append(np.sort(np.hstack([reps, fresh]), axis=1))
    if k < d and new.size:
        batches.append(np.sort(np.hstack([np.tile(cur, (new.size, 1)), new[:, None]]), axis=1))
    return batches


def _count_actions(n_targets: int, n_current: int, d: int, mode: NashMode) -> int:
    if mode is NashMode.EXHAUSTIVE:
        return sum(math.comb(n_targets, s) for s in range(d + 1))
    fresh = n_targets - n_current
    return n_current * (1 + fresh) + (fresh if n_current < d else 0)


def verify_nash(g: PeerGraph, capped: Optional[bool] = None, mode="exhaustive",
                budget: int = 10 ** 6, weights=None) -> NashVerdict:
    """Look for a node that can strictly lower its score by re-choosing its
    out-neighbours.

    An action is feasible when it avoids the node itself, nodes already
    pointing at it, and (``capped``) nodes whose in-degree, not counting the
    deviating node's own edge, has reached ``d_in``.  Exhaustive mode scans
    every feasible set of at most ``d`` targets, smallest sets first and
    lexicographically within a size; single-swap mode only tries dropping,
    replacing or adding one out-edge, in that order.  The first strict improvement found is
    returned as the witness.
    """
    mode = NashMode.parse(mode)
    if capped is None:
        capped = g.params.capped
    w = prepare_weights(g, weights)
    d = g.d
    examined = 0
    for u in range(g.n):
        targets = _feasible_targets(g, u, capped)
        current = sorted(g.out_edges[u])
        count = _count_actions(len(targets), len(current), d, mode)
        if examined + count > budget:
            raise BudgetExceeded(
                f"node {u} needs {count} more actions; budget {budget} allows {budget - examined}",
                nodes_checked=u,
                actions_examined=examined,
            )
        scorer = _NodeScorer(g, u, w)
        old = scorer.numerators(np.array([current], dtype=np.int64).reshape(1, len(current)))[0]
        if mode is NashMode.EXHAUSTIVE:
            batches = (
                (size, combos)
                for size, it in _exhaustive_actions(targets, d)
                for combos in _batched(it, size)
            )
        else:
            batches = ((b.shape[1], b) for b in _swap_actions(current, targets, d))
        for _, combos in batches:
            nums = scorer.numerators(combos)
            examined += len(combos)
            better = np.flatnonzero(nums < old)
            if better.size:
                idx = int(better[0])
                action = tuple(int(x) for x in combos[idx])
                witness = NashWitness(u, action, w.fraction(old), w.fraction(nums[idx]))
                return NashVerdict(False, witness, mode, examined)
    return NashVerdict(True, None, mode, examined)


def _batched(it, size: int):
    while True:
        chunk = list(itertools.islice(it, _BATCH))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.int64).reshape(len(chunk), size)


# -- structural stability ----------------------------------------------------------

@dataclass(frozen=True)
class StabilityVerdict:
    miner_clique: bool
    structural_miner_stable: bool
    structural_network_stable: bool
    empirically_stable_edges: Optional[int] = None
    window: Optional[int] = None

    def report(self) -> str:
        lines = [
            f"miner_clique={str(self.miner_clique).lower()}",
            f"structural_miner_stable={str(self.structural_miner_stable).lower()}",
            f"structural_network_stable={str(self.structural_network_stable).lower()}",
        ]
        if self.window is not None:
            # finite-window proxy, not the infinite-horizon definition
            lines.append(f"empirically_stable_edges={self.empirically_stable_edges}")
            lines.append(f"window={self.window}")
        return "\n".join(lines)


def miner_clique(g: PeerGraph) -> bool:
    return all(g.connected(i, j) for i in range(g.m) for j in range(i + 1, g.m))


def find_miner_core(g: PeerGraph) -> Optional[Tuple[int, ...]]:
    """A set of ``d - 1`` pairwise-adjacent miners that every other miner
    spends all ``d - 1`` of its stable out-edges on, or ``None``."""
    size = g.d - 1
    m = g.m
    if size == 0 or size > m:
        return None
    if size == m:
        return tuple(range(m)) if _is_core(g, tuple(range(m))) else None
    # any miner outside the core points at the whole core
    tried = set()
    for x in range(m):
        targets = sorted(t for t in g.out_edges[x] if t < m)
        for core in itertools.combinations(targets, size):
            if core not in tried:
                tried.add(core)
                if _is_core(g, core):
                    return core
    return None


def _is_core(g: PeerGraph, core: Tuple[int, ...]) -> bool:
    cs = set(core)
    for a, b in itertools.combinations(core, 2):
        if not g.connected(a, b):
            return False
    for v in range(g.m):
        if v in cs:
            continue
        miner_targets = {t for t in g.out_edges[v] if t < g.m}
        if not cs <= miner_targets or len(miner_targets) != len(cs):
            return False
        if g.out_degree(v) < len(cs):
            return False
    return True


def _class_minimum(w, v: int, m: int) -> Fraction:
    # lowest score v could ever reach: adjacent to every miner
    if v < m:
        return 1 - w.fraction(w.numerators[v])
    return Fraction(1)


def _network_stable(g: PeerGraph, scores: Sequence[Fraction], w) -> bool:
    """Sufficient condition: no possible exploratory edge can displace a
    current edge.

    Every node not adjacent to all others holds exactly ``d - k`` edges (its
    stable set); every current target sits at its lowest attainable score
    and beats, or wins the tie against, the lowest attainable score of every
    node it could newly connect to.
    """
    p = g.params
    n, m = g.n, g.m
    keep = p.d - p.k_worst
    rule = p.tie_rule
    floor = [_class_minimum(w, v, m) for v in range(n)]
    adj = np.zeros((n, n), dtype=bool)
    for s, out in enumerate(g.out_edges):
        for t in out:
            adj[s, t] = adj[t, s] = True
    ranks = [info.rank for info in g.nodes]
    for v in range(n):
        cands = [x for x in np.flatnonzero(~adj[v]).tolist() if x != v]
        deg = g.out_degree(v)
        if not cands:
            if deg > keep:
                return False
            continue
        if deg != keep:
            return False
        for u in g.out_edges[v]:
            if scores[u] != floor[u]:
                return False
            for x in cands:
                if scores[u] < floor[x]:
                    continue
                if scores[u] > floor[x]:
                    return False
                if rule is TieRule.LIFO:
                    continue
                if rule is TieRule.GLOBAL and ranks[u] < ranks[x]:
                    continue
                return False
    return True


def structural_miner_stable(g: PeerGraph) -> bool:
    p = g.params
    clique = miner_clique(g)
    if clique and p.m < 2 * p.d:
        return True
    if p.tie_rule in (TieRule.LIFO, TieRule.GLOBAL):
        core = find_miner_core(g)
        if core is None:
            return False
        if p.tie_rule is TieRule.GLOBAL:
            # the core must be the top-ranked miners
            top = sorted(range(p.m), key=lambda v: g.nodes[v].rank)[: len(core)]
            return set(core) == set(top)
        return True
    return False


def check_structural_stability(g: PeerGraph, weights=None) -> StabilityVerdict:
    w = prepare_weights(g, weights)
    scores = all_scores(g, w)
    return StabilityVerdict(
        miner_clique=miner_clique(g),
        structural_miner_stable=structural_miner_stable(g),
        structural_network_stable=_network_stable(g, scores, w),
    )


@dataclass(frozen=True)
class ConsequenceAudit:
    miner_diameter: int
    network_diameter: int
    network_bound_checked: bool
    violations: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_stability_consequences(g: PeerGraph, verdict: Optional[StabilityVerdict] = None) -> ConsequenceAudit:
    """Miner diameter at most 2; network diameter at most 3 whenever every
    non-miner is adjacent to some miner.  Violations are returned, not raised."""
    violations = []
    if verdict is not None and not verdict.structural_miner_stable:
        violations.append("precondition: graph is not structurally miner-stable")
    md, _ = diameter(g, range(g.m))
    if md > 2:
        violations.append(f"miner diameter {md} > 2")
    nd, _ = diameter(g)
    check_net = all(any(t < g.m for t in g.neighbors(v)) for v in range(g.m, g.n))
    if check_net and nd > 3:
        violations.append(f"network diameter {nd} > 3")
    return ConsequenceAudit(md, nd, check_net, tuple(violations))


# -- empirical stability ------------------------------------------------------------

class EdgeHistory:
    """Round of the last change of every pair indicator e_{i,j}.

    Feed one snapshot of undirected pairs per round, starting at round 0.
    Pairs never seen keep their initial value 0 and never change.
    """

    def __init__(self, initial_pairs: Iterable[Tuple[int, int]] = (), round: int = 0):
        self.current = {_pair(*p) for p in initial_pairs}
        self.last_change: Dict[Tuple[int, int], int] = {p: round for p in self.current}
        self.first_round = round
        self.round = round

    def update(self, pairs: Iterable[Tuple[int, int]], round: Optional[int] = None) -> None:
        round = self.round + 1 if round is None else round
        new = {_pair(*p) for p in pairs}
        for p in new ^ self.current:
            self.last_change[p] = round
        self.current = new
        self.round = round

    @property
    def covered(self) -> int:
        return self.round - self.first_round

    @classmethod
    def from_snapshots(cls, snapshots: Sequence[Iterable[Tuple[int, int]]]) -> "EdgeHistory":
        it = iter(snapshots)
        h = cls(next(it, ()))
        for snap in it:
            h.update(snap)
        return h


def _pair(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)


def empirical_stability(history: EdgeHistory, window: int = DEFAULT_WINDOW) -> Tuple[Dict[Tuple[int, int], bool], int]:
    """Flag every pair whose indicator has not changed in the last ``window``
    rounds.

    Flags cover every pair that was ever present; the count is the number of
    currently present edges that are flagged stable.  A finite-window proxy
    for stability, not the definition itself.
    """
    if window < 1:
        raise ValueError("window must be positive")
    if history.covered < window:
        raise HistoryTooShort(f"history covers {history.covered} rounds, window is {window}")
    cutoff = history.round - window
    # a pair last changed at round r has held its value since the end of round r
    flags = {p: r <= cutoff for p, r in history.last_change.items()}
    count = sum(1 for p in history.current if flags[p])
    return flags, count


# -- regime oracle ------------------------------------------------------------

class Existence(enum.Enum):
    EXISTS = "Exists"
    IMPOSSIBLE = "Impossible"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class RegimeAnswer:
    miner_stable: Existence
    network_stable: Existence
    citations: Tuple[str, ...]

    def line(self) -> str:
        return f"miner_stable={self.miner_stable.value} network_stable={self.network_stable.value}"


# names of the results each answer rests on
CLIQUE = "clique-miner-stability"
CORE = "ordered-core-miner-stability"
FIFO_RANDOM_NO_MINER = "fifo-random-no-miner-stability"
SMALL_M_TOPOLOGY = "small-m-stable-topology"
LARGE_M_NO_NETWORK = "lifo-global-large-m-no-stable-topology"
LARGE_N_NO_NETWORK = "fifo-random-large-n-no-stable-topology"
CAPPED_MINER = "capped-miner-stability"
SIZE_GUARD = "guard-n-above-2d^2-not-met"
OPEN = "open-regime"


def regime_oracle(n: int, m: int, d: int, d_in: Optional[int] = None, tie_rule=TieRule.LIFO) -> RegimeAnswer:
    """Existence of miner-stable and network-stable topologies.

    "n much larger than d" is read as ``n > 2 d^2``; below it the
    network-stability answers that need it fall back to Unknown.
    """
    rule = TieRule.parse(tie_rule)
    ordered = rule in (TieRule.LIFO, TieRule.GLOBAL)
    small_m = m < 2 * d
    large_n = n > 2 * d * d
    E, I, U = Existence.EXISTS, Existence.IMPOSSIBLE, Existence.UNKNOWN

    if d_in is not None:
        if small_m:
            return RegimeAnswer(E, U, (CLIQUE, CAPPED_MINER, OPEN))
        if ordered and m <= max(2 * d - 1, Fraction(d_in) + Fraction(d, 2)):
            return RegimeAnswer(E, U, (CAPPED_MINER, OPEN))
        return RegimeAnswer(U, U, (OPEN,))

    if ordered:
        if small_m:
            return RegimeAnswer(E, E, (CLIQUE, SMALL_M_TOPOLOGY))
        if large_n:
            return RegimeAnswer(E, I, (CORE, LARGE_M_NO_NETWORK))
        return RegimeAnswer(E, U, (CORE, SIZE_GUARD))

    if not small_m:
        return RegimeAnswer(I, I, (FIFO_RANDOM_NO_MINER,))
    if large_n:
        return RegimeAnswer(E, I, (CLIQUE, LARGE_N_NO_NETWORK))
    return RegimeAnswer(E, U, (CLIQUE, SIZE_GUARD))
