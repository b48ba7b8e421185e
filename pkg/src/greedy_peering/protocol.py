"""Round engine for greedy exploratory peering.

Each round:

1. nodes, in a fresh random order, add random out-edges until they hold
   ``d`` (or ``k_add`` more) or no feasible peer is left;
2. every node's score is computed on the resulting graph;
3. every node holding exactly ``d`` out-edges drops its ``k_worst``
   highest-scoring out-neighbours, ties broken by the tie rule.

All drops in a round are taken against the frozen step-2 scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigMismatch
from .graph import EdgeRecord, GameParams, PeerGraph, TieRule
from .metrics import RoundMetrics, prepare_weights, round_metrics, score_numerators

# consecutive rejected draws before switching to an explicit candidate list
_MAX_REJECTIONS = 24


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; ``seed`` may be an int or a ``SeedSequence``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class RoundReport:
    round: int
    additions: Tuple[EdgeRecord, ...]
    drops: Tuple[EdgeRecord, ...]
    scores_snapshot: Tuple[Fraction, ...]


class _Draws:
    """Buffered uniform integers in ``[0, n)``."""

    def __init__(self, rng: np.random.Generator, n: int, chunk: int):
        self.rng = rng
        self.n = n
        self.chunk = max(chunk, 16)
        self.buf: List[int] = []
        self.pos = 0

    def next(self) -> int:
        if self.pos >= len(self.buf):
            self.buf = self.rng.integers(0, self.n, size=self.chunk).tolist()
            self.pos = 0
        v = self.buf[self.pos]
        self.pos += 1
        return v


def _feasible(g: PeerGraph, i: int, j: int) -> bool:
    return j != i and not g.connected(i, j) and g.has_in_capacity(j)


def _pick_peer(g: PeerGraph, i: int, draws: _Draws, rng: np.random.Generator) -> Optional[int]:
    # rejection sampling from uniform draws is exactly uniform on the
    # feasible set; the explicit list only kicks in when it is small
    for _ in range(_MAX_REJECTIONS):
        j = draws.next()
        if _feasible(g, i, j):
            return j
    candidates = [j for j in range(g.n) if _feasible(g, i, j)]
    if not candidates:
        return None
    return candidates[int(rng.integers(len(candidates)))]


def step_add(g: PeerGraph, rng: np.random.Generator, round: int,
             k_add: Optional[int] = None) -> List[EdgeRecord]:
    """Step 1: every node below out-degree ``d`` adds random feasible peers."""
    p = g.params
    if k_add is None:
        k_add = p.k_add
    order = rng.permutation(g.n).tolist()
    draws = _Draws(rng, g.n, 2 * g.n)
    added = []
    for i in order:
        need = p.d - g.out_degree(i)
        if k_add is not None:
            need = min(need, k_add)
        while need > 0:
            j = _pick_peer(g, i, draws, rng)
            if j is None:
                break
            added.append(g.add_edge(i, j, round))
            need -= 1
    return added


def _choose_drop(candidates: List[EdgeRecord], g: PeerGraph, tie_rule: TieRule,
                 rng: np.random.Generator) -> EdgeRecord:
    if len(candidates) == 1:
        return candidates[0]
    if tie_rule is TieRule.FIFO:
        return min(candidates, key=lambda r: r.age_key)
    if tie_rule is TieRule.LIFO:
        return max(candidates, key=lambda r: r.age_key)
    if tie_rule is TieRule.GLOBAL:
        # rank 0 is the highest priority and is kept
        return max(candidates, key=lambda r: g.nodes[r.dst].rank)
    candidates = sorted(candidates, key=lambda r: r.dst)
    return candidates[int(rng.integers(len(candidates)))]


def step_drop(g: PeerGraph, scores: Sequence, tie_rule: Optional[TieRule] = None,
              rng: Optional[np.random.Generator] = None, k: Optional[int] = None,
              order: Optional[Sequence[int]] = None) -> List[EdgeRecord]:
    """Step 3: nodes at out-degree ``d`` drop their ``k`` worst out-neighbours.

    ``scores`` is the frozen snapshot from step 2; anything ordered works
    (Fractions or integer numerators over a common denominator).  Nodes are
    visited in ``order`` (ascending ids by default); with a deterministic tie
    rule the result does not depend on it.
    """
    p = g.params
    tie_rule = p.tie_rule if tie_rule is None else TieRule.parse(tie_rule)
    k = p.k_worst if k is None else k
    if tie_rule is TieRule.RANDOM and rng is None:
        raise ValueError("the random tie rule needs an rng")
    order = range(g.n) if order is None else order
    targets = [v for v in order if g.out_degree(v) == p.d]
    dropped = []
    for v in targets:
        remaining = list(g.out_edges[v].values())
        for _ in range(min(k, len(remaining))):
            worst = max(scores[r.dst] for r in remaining)
            tied = [r for r in remaining if scores[r.dst] == worst]
            rec = _choose_drop(tied, g, tie_rule, rng)
            remaining.remove(rec)
            dropped.append(g.remove_edge(v, rec.dst))
    return dropped


def run_round(g: PeerGraph, rng: np.random.Generator, round: int, params: Optional[GameParams] = None,
              weights=None) -> RoundReport:
    if params is not None and params != g.params:
        raise ConfigMismatch("graph parameters differ from the requested game")
    w = prepare_weights(g, weights)
    additions = step_add(g, rng, round)
    nums, den = score_numerators(g, w)
    nums = nums.tolist()
    drops = step_drop(g, nums, g.params.tie_rule, rng, g.params.k_worst)
    snapshot = tuple(Fraction(int(x), den) for x in nums)
    return RoundReport(round, tuple(additions), tuple(drops), snapshot)


def run_simulation(params: GameParams, graph: PeerGraph, rounds: int, rng, weights=None,
                   on_round: Optional[Callable[[PeerGraph, RoundReport, Optional[RoundMetrics]], None]] = None,
                   start_round: int = 1, collect_metrics: bool = True
                   ) -> List[Tuple[RoundReport, Optional[RoundMetrics]]]:
    """Run ``rounds`` rounds in place on ``graph``.

    Rounds are numbered from ``start_round``; round 0 is the initial graph.
    ``on_round`` is called after every round with the mutated graph.  With
    ``collect_metrics=False`` the per-round statistics are skipped (``None``).
    """
    if params != graph.params:
        raise ConfigMismatch("graph parameters differ from the requested game")
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    rng = make_rng(rng)
    w = prepare_weights(graph, weights)
    out = []
    for r in range(start_round, start_round + rounds):
        report = run_round(graph, rng, r, weights=w)
        metrics = None
        if collect_metrics:
            metrics = round_metrics(graph, r, w, len(report.additions), len(report.drops))
        out.append((report, metrics))
        if on_round is not None:
            on_round(graph, report, metrics)
    return out
