"""Exact scores and network statistics.

Scores are kept as :class:`fractions.Fraction`.  Internally, weights are
brought to a common denominator so that a score is an integer numerator
``sum_j a_j * dist(v, j)`` over that denominator; all comparisons made by the
protocol are therefore exact.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BadWeights
from .graph import PeerGraph
from .kernels import bfs_multi

Score = Fraction


# -- weights --------------------------------------------------------------

def uniform_weights(n: int, m: int) -> Tuple[Fraction, ...]:
    w = Fraction(1, m)
    return tuple(w if i < m else Fraction(0) for i in range(n))


def linear_weights(n: int, m: int) -> Tuple[Fraction, ...]:
    """Miner ``i`` (1-based) gets weight proportional to ``i/(i+1)``."""
    raw = [Fraction(i, i + 1) for i in range(1, m + 1)]
    return _normalise(raw, n)


def exponential_weights(n: int, m: int) -> Tuple[Fraction, ...]:
    """Miner ``i`` (1-based) gets weight proportional to ``(1/2)**i``."""
    raw = [Fraction(1, 2 ** i) for i in range(1, m + 1)]
    return _normalise(raw, n)


def _normalise(raw, n):
    total = sum(raw)
    return tuple(w / total for w in raw) + (Fraction(0),) * (n - len(raw))


WEIGHT_SCHEMES = {
    "uniform": uniform_weights,
    "linear": linear_weights,
    "exponential": exponential_weights,
}


def miner_weights(n: int, m: int, scheme: str = "uniform") -> Tuple[Fraction, ...]:
    try:
        return WEIGHT_SCHEMES[scheme](n, m)
    except KeyError:
        raise ValueError(f"unknown weight scheme {scheme!r}") from None


class _Weights:
    """Weights as integer numerators over a common denominator."""

    __slots__ = ("numerators", "denominator", "miners", "vector", "use_int64")

    def __init__(self, g: PeerGraph, weights: Optional[Sequence] = None):
        if weights is None:
            weights = [info.weight for info in g.nodes]
        weights = [Fraction(w) for w in weights]
        if len(weights) != g.n:
            raise BadWeights(f"expected {g.n} weights, got {len(weights)}")
        if any(w < 0 for w in weights):
            raise BadWeights("weights must be non-negative")
        if any(w != 0 for w in weights[g.m:]):
            raise BadWeights("non-miners must have zero weight")
        if sum(weights) != 1:
            raise BadWeights(f"weights sum to {sum(weights)}, not 1")
        den = 1
        for w in weights[: g.m]:
            den = den * w.denominator // math.gcd(den, w.denominator)
        nums = [int(w * den) for w in weights[: g.m]]
        self.numerators = nums
        self.denominator = den
        self.miners = np.arange(g.m, dtype=np.int32)
        self.use_int64 = max(nums) * g.n * g.m < 2 ** 62
        if self.use_int64:
            self.vector = np.array(nums, dtype=np.int64)
        else:
            self.vector = np.array(nums, dtype=object)

    def weighted_sums(self, dist_to_miners: np.ndarray):
        """Integer score numerators; ``dist_to_miners`` has one column per miner."""
        if self.use_int64:
            return dist_to_miners.astype(np.int64) @ self.vector
        return dist_to_miners.astype(object) @ self.vector

    def fraction(self, numerator) -> Fraction:
        return Fraction(int(numerator), self.denominator)


def prepare_weights(g: PeerGraph, weights=None) -> _Weights:
    if isinstance(weights, _Weights):
        return weights
    return _Weights(g, weights)


# -- distances --------------------------------------------------------------

def bfs_distances(g: PeerGraph, source: int) -> np.ndarray:
    """Undirected hop distances from ``source``; unreachable nodes get ``n``."""
    indptr, indices = g.undirected_csr()
    return bfs_multi(indptr, indices, g.n, [source])[0]


def distance_matrix(g: PeerGraph, sources: Optional[Iterable[int]] = None) -> np.ndarray:
    """Rows of hop distances, one per source (all nodes by default)."""
    indptr, indices = g.undirected_csr()
    if sources is None:
        sources = np.arange(g.n, dtype=np.int32)
    return bfs_multi(indptr, indices, g.n, np.fromiter(sources, dtype=np.int32))


def _miner_distances(g: PeerGraph) -> np.ndarray:
    """n x m matrix of distances to each miner."""
    return distance_matrix(g, range(g.m)).T


# -- scores -----------------------------------------------------------------

def score(g: PeerGraph, node: int, weights=None) -> Score:
    """Weighted average undirected distance from ``node`` to the miners."""
    w = prepare_weights(g, weights)
    dist = bfs_distances(g, node)[: g.m]
    return w.fraction(w.weighted_sums(dist[None, :])[0])


def score_numerators(g: PeerGraph, weights=None, dist_to_miners=None):
    """Integer score numerators for every node, plus the shared denominator."""
    w = prepare_weights(g, weights)
    if dist_to_miners is None:
        dist_to_miners = _miner_distances(g)
    return w.weighted_sums(dist_to_miners), w.denominator


def all_scores(g: PeerGraph, weights=None) -> List[Score]:
    nums, den = score_numerators(g, weights)
    return [Fraction(int(x), den) for x in nums]


# -- structure ----------------------------------------------------------------

def diameter(g: PeerGraph, subset: Optional[Iterable[int]] = None) -> Tuple[int, bool]:
    """Max pairwise distance over ``subset`` measured through the whole graph.

    Returns ``(value, disconnected)``; an unreachable pair reports ``n``.
    """
    nodes = list(range(g.n)) if subset is None else sorted(set(subset))
    if len(nodes) < 2:
        return 0, False
    dist = distance_matrix(g, nodes)[:, nodes]
    value = int(dist.max())
    return value, value >= g.n


def eccentricities(g: PeerGraph, dist: Optional[np.ndarray] = None) -> np.ndarray:
    if dist is None:
        dist = distance_matrix(g)
    return dist.max(axis=1)


def eccentricity_stats(g: PeerGraph) -> Tuple[Fraction, Fraction]:
    """Average eccentricity over all nodes and over miners.

    A miner's eccentricity is the max over *all* nodes, not only miners.
    """
    ecc = eccentricities(g)
    return Fraction(int(ecc.sum()), g.n), Fraction(int(ecc[: g.m].sum()), g.m)


def in_degree_distribution(g: PeerGraph, subset: Optional[Iterable[int]] = None) -> Dict[int, int]:
    nodes = range(g.n) if subset is None else subset
    return dict(Counter(g.in_degree(v) for v in nodes))


def score_distribution(scores: Sequence[Fraction], bin_width=Fraction(1, 10)) -> Dict[Fraction, int]:
    """Histogram keyed by the lower edge of each bin ``[k*w, (k+1)*w)``."""
    if isinstance(bin_width, float):
        bin_width = Fraction(str(bin_width))
    bin_width = Fraction(bin_width)
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    hist: Counter = Counter()
    for s in scores:
        hist[math.floor(Fraction(s) / bin_width) * bin_width] += 1
    return dict(sorted(hist.items()))


def histogram_l1(a: Dict, b: Dict) -> int:
    return sum(abs(a.get(k, 0) - b.get(k, 0)) for k in set(a) | set(b))


# -- per-round snapshot ----------------------------------------------------------

@dataclass(frozen=True)
class RoundMetrics:
    round: int
    avg_score_all: Fraction
    avg_score_miners: Fraction
    avg_score_nonminers: Optional[Fraction]  # None when every node is a miner
    diameter: int
    miner_diameter: int
    avg_eccentricity: Fraction
    avg_miner_eccentricity: Fraction
    edges_added: int
    edges_dropped: int
    disconnected: bool


def round_metrics(g: PeerGraph, round: int, weights=None, edges_added: int = 0,
                  edges_dropped: int = 0) -> RoundMetrics:
    """Every statistic the experiment harness reports for one round."""
    w = prepare_weights(g, weights)
    n, m = g.n, g.m
    dist = distance_matrix(g)
    nums = w.weighted_sums(dist[:, :m])
    den = w.denominator
    total_all = int(nums.sum())
    total_miners = int(nums[:m].sum())
    ecc = dist.max(axis=1)
    return RoundMetrics(
        round=round,
        avg_score_all=Fraction(total_all, den * n),
        avg_score_miners=Fraction(total_miners, den * m),
        avg_score_nonminers=(Fraction(total_all - total_miners, den * (n - m)) if n > m else None),
        diameter=int(ecc.max()),
        miner_diameter=int(dist[:m, :m].max()),
        avg_eccentricity=Fraction(int(ecc.sum()), n),
        avg_miner_eccentricity=Fraction(int(ecc[:m].sum()), m),
        edges_added=edges_added,
        edges_dropped=edges_dropped,
        disconnected=bool(ecc.max() >= n),
    )
