"""Directed peer graph with undirected-distance semantics.

Nodes ``0..m-1`` are miners, ``m..n-1`` are non-miners.  Edges are directed
(the source owns the connection and counts it against its out-degree ``d``),
but at most one of ``(i, j)`` and ``(j, i)`` may exist at a time and all
distances are measured on the undirected version of the graph.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .errors import (
    AlreadyConnected,
    DstInFull,
    NoSuchEdge,
    ParseError,
    SelfLoop,
    SrcOutFull,
    ValidationError,
)


class TieRule(enum.Enum):
    RANDOM = "random"
    FIFO = "fifo"
    LIFO = "lifo"
    GLOBAL = "global"

    @classmethod
    def parse(cls, value) -> "TieRule":
        if isinstance(value, TieRule):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "random": cls.RANDOM,
            "fifo": cls.FIFO,
            "lifo": cls.LIFO,
            "global": cls.GLOBAL,
            "globalordering": cls.GLOBAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown tie rule {value!r}") from None

    @property
    def deterministic(self) -> bool:
        return self is not TieRule.RANDOM


@dataclass(frozen=True)
class GameParams:
    """Full game configuration.

    ``d_in=None`` means the in-degree is unbounded.  ``k_add`` caps how many
    edges a node may add per round; ``None`` refills up to ``d``.
    """

    n: int
    m: int
    d: int
    d_in: Optional[int] = None
    tie_rule: TieRule = TieRule.LIFO
    k_worst: int = 1
    k_add: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "tie_rule", TieRule.parse(self.tie_rule))
        bad = []
        if self.n < 1:
            bad.append("n")
        if not 1 <= self.m <= self.n:
            bad.append("m")
        if self.d < 1:
            bad.append("d")
        if self.d_in is not None and self.d_in <= self.d:
            bad.append("d_in")
        if not 1 <= self.k_worst <= self.d:
            bad.append("k_worst")
        if self.k_add is not None and self.k_add < 1:
            bad.append("k_add")
        if bad:
            raise ValidationError(f"invalid game parameters: {', '.join(bad)} ({self})", bad)

    @property
    def capped(self) -> bool:
        return self.d_in is not None

    def header(self) -> str:
        d_in = "inf" if self.d_in is None else str(self.d_in)
        return (
            f"# n={self.n} m={self.m} d={self.d} d_in={d_in} "
            f"tie={self.tie_rule.value} k={self.k_worst}"
        )

    @classmethod
    def from_header(cls, line: str) -> "GameParams":
        line = line.strip()
        if not line.startswith("#"):
            raise ParseError(f"edge list header must start with '#': {line!r}")
        fields = {}
        for token in line[1:].split():
            key, sep, value = token.partition("=")
            if not sep:
                raise ParseError(f"malformed header token {token!r}")
            fields[key] = value
        try:
            d_in = None if fields["d_in"] == "inf" else int(fields["d_in"])
            return cls(
                n=int(fields["n"]),
                m=int(fields["m"]),
                d=int(fields["d"]),
                d_in=d_in,
                tie_rule=TieRule.parse(fields["tie"]),
                k_worst=int(fields["k"]),
            )
        except KeyError as exc:
            raise ParseError(f"edge list header missing {exc.args[0]!r}") from None
        except ValueError as exc:
            raise ParseError(str(exc)) from None


@dataclass(frozen=True)
class NodeInfo:
    id: int
    is_miner: bool
    weight: Fraction
    rank: int


@dataclass(frozen=True)
class EdgeRecord:
    src: int
    dst: int
    round_added: int
    seq: int

    @property
    def age_key(self):
        """Total order on edge age: smaller is older."""
        return (self.round_added, self.seq)


def default_nodes(n: int, m: int) -> List[NodeInfo]:
    w = Fraction(1, m)
    return [NodeInfo(i, i < m, w if i < m else Fraction(0), i) for i in range(n)]


class PeerGraph:
    """Mutable directed graph over a fixed node set.

    ``out_edges[v]`` maps destination -> :class:`EdgeRecord` in insertion
    order; ``in_nbrs[v]`` is the set of sources pointing at ``v``.
    """

    def __init__(self, params: GameParams, nodes: Optional[Sequence[NodeInfo]] = None):
        self.params = params
        n = params.n
        if nodes is None:
            nodes = default_nodes(n, params.m)
        nodes = list(nodes)
        if len(nodes) != n:
            raise ValidationError("node list length must equal n", ["nodes"])
        self.nodes: List[NodeInfo] = nodes
        self.out_edges: List[Dict[int, EdgeRecord]] = [{} for _ in range(n)]
        self.in_nbrs: List[set] = [set() for _ in range(n)]
        self._next_seq = 0
        self._version = 0
        self._csr_cache = None

    # -- basic queries -------------------------------------------------
    @property
    def n(self) -> int:
        return self.params.n

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def miners(self) -> range:
        return range(self.params.m)

    def out_degree(self, v: int) -> int:
        return len(self.out_edges[v])

    def in_degree(self, v: int) -> int:
        return len(self.in_nbrs[v])

    def has_edge(self, src: int, dst: int) -> bool:
        return dst in self.out_edges[src]

    def connected(self, i: int, j: int) -> bool:
        """The symmetric indicator e_{i,j}."""
        return j in self.out_edges[i] or i in self.out_edges[j]

    def neighbors(self, v: int) -> set:
        return set(self.out_edges[v]).union(self.in_nbrs[v])

    def degree(self, v: int) -> int:
        return len(self.out_edges[v]) + len(self.in_nbrs[v])

    def has_in_capacity(self, v: int) -> bool:
        d_in = self.params.d_in
        return d_in is None or len(self.in_nbrs[v]) < d_in

    def edges(self) -> List[EdgeRecord]:
        """All live edges in sequence order."""
        recs = [r for out in self.out_edges for r in out.values()]
        recs.sort(key=lambda r: r.seq)
        return recs

    def edge_pairs(self) -> set:
        """Unordered pairs ``(min, max)`` with e_{i,j} = 1."""
        return {(min(s, t), max(s, t)) for s, out in enumerate(self.out_edges) for t in out}

    def num_edges(self) -> int:
        return sum(len(out) for out in self.out_edges)

    @property
    def next_seq(self) -> int:
        return self._next_seq

    # -- mutation ------------------------------------------------------
    def add_edge(self, src: int, dst: int, round: int = 0) -> EdgeRecord:
        if src == dst:
            raise SelfLoop(f"self loop at {src}")
        if self.connected(src, dst):
            raise AlreadyConnected(f"{src} and {dst} are already connected")
        if len(self.out_edges[src]) >= self.params.d:
            raise SrcOutFull(f"node {src} already has {self.params.d} out-edges")
        if not self.has_in_capacity(dst):
            raise DstInFull(f"node {dst} has no inbound capacity left")
        rec = EdgeRecord(src, dst, round, self._next_seq)
        self._next_seq += 1
        self.out_edges[src][dst] = rec
        self.in_nbrs[dst].add(src)
        self._touch()
        return rec

    def remove_edge(self, src: int, dst: int) -> EdgeRecord:
        try:
            rec = self.out_edges[src].pop(dst)
        except KeyError:
            raise NoSuchEdge(f"no edge ({src}, {dst})") from None
        self.in_nbrs[dst].discard(src)
        self._touch()
        return rec

    def _insert_record(self, rec: EdgeRecord) -> None:
        # used by import: keeps the stored round/seq
        if rec.src == rec.dst:
            raise SelfLoop(f"self loop at {rec.src}")
        if self.connected(rec.src, rec.dst):
            raise AlreadyConnected(f"{rec.src} and {rec.dst} are already connected")
        if len(self.out_edges[rec.src]) >= self.params.d:
            raise SrcOutFull(f"node {rec.src} already has {self.params.d} out-edges")
        if not self.has_in_capacity(rec.dst):
            raise DstInFull(f"node {rec.dst} has no inbound capacity left")
        self.out_edges[rec.src][rec.dst] = rec
        self.in_nbrs[rec.dst].add(rec.src)
        self._next_seq = max(self._next_seq, rec.seq + 1)
        self._touch()

    def _touch(self):
        self._version += 1
        self._csr_cache = None

    def copy(self) -> "PeerGraph":
        g = PeerGraph(self.params, self.nodes)
        g.out_edges = [dict(out) for out in self.out_edges]
        g.in_nbrs = [set(s) for s in self.in_nbrs]
        g._next_seq = self._next_seq
        return g

    def with_params(self, params: GameParams) -> "PeerGraph":
        """Copy of this graph under different (compatible) parameters."""
        if params.n != self.n or params.m != self.m:
            raise ValidationError("node counts must match", ["n", "m"])
        g = PeerGraph(params, self.nodes)
        for rec in self.edges():
            g._insert_record(rec)
        g._next_seq = self._next_seq
        return g

    # -- adjacency for the distance kernels ----------------------------
    def undirected_csr(self):
        """(indptr, indices) int32 arrays of the undirected adjacency."""
        if self._csr_cache is None:
            n = self.n
            counts = np.fromiter(
                (len(self.out_edges[v]) + len(self.in_nbrs[v]) for v in range(n)),
                dtype=np.int32,
                count=n,
            )
            indptr = np.zeros(n + 1, dtype=np.int32)
            np.cumsum(counts, out=indptr[1:])
            flat = []
            for v in range(n):
                flat.extend(self.out_edges[v])
                flat.extend(self.in_nbrs[v])
            indices = np.array(flat, dtype=np.int32)
            self._csr_cache = (indptr, indices)
        return self._csr_cache

    # -- validation ----------------------------------------------------
    def audit(self) -> List[str]:
        """Return a list of invariant violations (empty when healthy)."""
        problems = []
        p = self.params
        seen = set()
        for v, out in enumerate(self.out_edges):
            if len(out) > p.d:
                problems.append(f"node {v} out-degree {len(out)} > d={p.d}")
            for t, rec in out.items():
                if t == v:
                    problems.append(f"self loop at {v}")
                if rec.src != v or rec.dst != t:
                    problems.append(f"record mismatch at ({v}, {t})")
                if v in self.out_edges[t]:
                    problems.append(f"bidirectional pair ({v}, {t})")
                if v not in self.in_nbrs[t]:
                    problems.append(f"in-neighbour set missing ({v}, {t})")
                if rec.age_key in seen:
                    problems.append(f"duplicate edge age {rec.age_key}")
                seen.add(rec.age_key)
                if rec.seq >= self._next_seq:
                    problems.append(f"edge seq {rec.seq} not below counter")
        for v, ins in enumerate(self.in_nbrs):
            if p.d_in is not None and len(ins) > p.d_in:
                problems.append(f"node {v} in-degree {len(ins)} > d_in={p.d_in}")
            for s in ins:
                if v not in self.out_edges[s]:
                    problems.append(f"stale in-neighbour ({s}, {v})")
        return problems

    # -- serialisation -------------------------------------------------
    def to_edgelist(self) -> str:
        lines = [self.params.header()]
        for r in self.edges():
            lines.append(f"{r.src},{r.dst},{r.round_added},{r.seq}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str, nodes: Optional[Sequence[NodeInfo]] = None) -> "PeerGraph":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ParseError("empty edge list")
        params = GameParams.from_header(lines[0])
        g = cls(params, nodes)
        last_seq = -1
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) != 4:
                raise ParseError(f"bad edge line {ln!r}")
            try:
                src, dst, rnd, seq = (int(x) for x in parts)
            except ValueError:
                raise ParseError(f"bad edge line {ln!r}") from None
            if not (0 <= src < params.n and 0 <= dst < params.n):
                raise ParseError(f"node id out of range in {ln!r}")
            if seq <= last_seq:
                raise ParseError("edges must be listed in increasing seq order")
            last_seq = seq
            g._insert_record(EdgeRecord(src, dst, rnd, seq))
        return g

    def __repr__(self):
        return f"PeerGraph(n={self.n}, m={self.m}, d={self.d}, edges={self.num_edges()})"


def graph_from_edges(params: GameParams, edges: Iterable, nodes=None, round: int = 0) -> PeerGraph:
    """Build a graph by adding ``(src, dst)`` pairs in order."""
    g = PeerGraph(params, nodes)
    for src, dst in edges:
        g.add_edge(src, dst, round)
    return g


def with_ranks(params: GameParams, ranks: Sequence[int]) -> List[NodeInfo]:
    """Default node infos with a custom global ordering."""
    nodes = default_nodes(params.n, params.m)
    if sorted(ranks) != list(range(params.n)):
        raise ValidationError("ranks must be a permutation of range(n)", ["rank"])
    if any(ranks[i] >= params.m for i in range(params.m)):
        raise ValidationError("miners must occupy ranks 0..m-1", ["rank"])
    return [replace(info, rank=r) for info, r in zip(nodes, ranks)]


def with_weights(nodes: Sequence[NodeInfo], weights: Sequence[Fraction]) -> List[NodeInfo]:
    return [replace(info, weight=Fraction(w)) for info, w in zip(nodes, weights)]
