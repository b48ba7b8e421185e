"""Seeded multi-repetition experiments and their on-disk artifacts.

Config files are flat ``key = value`` text; ``#`` starts a comment.  Keys:

=================  ==========  ===============================================
key                default     meaning
=================  ==========  ===============================================
n, m, d            (required)  nodes, miners, out-degree
d_in               inf         inbound cap (``inf`` = uncapped)
tie_rule           lifo        random | fifo | lifo | global
k_worst            1           edges dropped per round
k_add              (refill)    edges added per round; default refills to d
topology           random      random | small-world | scale-free | miner-clique
rewire_p           0.5         small-world rewiring probability
seed_component     20          scale-free seed size (holds every miner)
rounds             256
repetitions        20
seed               0
weights            uniform     uniform | linear | exponential
output_dir         results     overridden by $GREEDY_PEERING_OUTPUT_DIR
stability_window   64          rounds an edge must hold to count as stable
workers            1           parallel repetitions
=================  ==========  ===============================================

Repetition ``r`` draws from ``SeedSequence(entropy=seed, spawn_key=(r,))``,
which is what :meth:`numpy.random.SeedSequence.spawn` would hand out.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .analysis import EdgeHistory, empirical_stability, regime_oracle
from .constructions import TOPOLOGIES, generate
from .errors import ParseError, ValidationError
from .graph import GameParams, PeerGraph, TieRule, default_nodes, with_weights
from .metrics import (
    WEIGHT_SCHEMES,
    RoundMetrics,
    all_scores,
    in_degree_distribution,
    miner_weights,
    prepare_weights,
    round_metrics,
    score_distribution,
)
from .protocol import make_rng, run_simulation

OUTPUT_ENV = "GREEDY_PEERING_OUTPUT_DIR"
SCHEMA_VERSION = 1

COLUMNS = (
    "round",
    "avg_score_all",
    "avg_score_miners",
    "avg_score_nonminers",
    "diameter",
    "miner_diameter",
    "avg_ecc",
    "avg_miner_ecc",
    "edges_added",
    "edges_dropped",
    "stable_edges",
    "disconnected",
)


@dataclass(frozen=True)
class ExperimentConfig:
    params: GameParams
    topology: str = "random"
    rewire_p: float = 0.5
    seed_component: int = 20
    rounds: int = 256
    repetitions: int = 20
    seed: int = 0
    weights: str = "uniform"
    output_dir: str = "results"
    stability_window: int = 64
    workers: int = 1
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def to_text(self) -> str:
        p = self.params
        pairs = [
            ("n", p.n), ("m", p.m), ("d", p.d),
            ("d_in", "inf" if p.d_in is None else p.d_in),
            ("tie_rule", p.tie_rule.value), ("k_worst", p.k_worst),
        ]
        if p.k_add is not None:
            pairs.append(("k_add", p.k_add))
        pairs += [
            ("topology", self.topology), ("rewire_p", repr(self.rewire_p)),
            ("seed_component", self.seed_component), ("rounds", self.rounds),
            ("repetitions", self.repetitions), ("seed", self.seed),
            ("weights", self.weights), ("output_dir", self.output_dir),
            ("stability_window", self.stability_window), ("workers", self.workers),
        ]
        return "".join(f"{k} = {v}\n" for k, v in pairs)


_INT_KEYS = ("n", "m", "d", "k_worst", "k_add", "seed_component", "rounds",
             "repetitions", "seed", "stability_window", "workers")
_KNOWN = set(_INT_KEYS) | {"d_in", "tie_rule", "topology", "rewire_p", "weights", "output_dir"}


def parse_config(text: str) -> ExperimentConfig:
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError(f"line {lineno}: expected key = value")
        if key not in _KNOWN:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    missing = [k for k in ("n", "m", "d") if k not in raw]
    if missing:
        raise ValidationError(f"missing required keys: {', '.join(missing)}", missing)
    vals: Dict[str, object] = {}
    bad = []
    for k in _INT_KEYS:
        if k in raw:
            try:
                vals[k] = int(raw[k])
            except ValueError:
                bad.append(k)
    if "rewire_p" in raw:
        try:
            vals["rewire_p"] = float(raw["rewire_p"])
        except ValueError:
            bad.append("rewire_p")
    d_in = raw.get("d_in", "inf")
    if d_in.lower() in ("inf", "none", ""):
        d_in = None
    else:
        try:
            d_in = int(d_in)
        except ValueError:
            bad.append("d_in")
    try:
        tie_rule = TieRule.parse(raw.get("tie_rule", "lifo"))
    except ValueError:
        bad.append("tie_rule")
    if bad:
        raise ValidationError(f"malformed values for: {', '.join(bad)}", bad)

    params = GameParams(
        n=vals["n"], m=vals["m"], d=vals["d"], d_in=d_in, tie_rule=tie_rule,
        k_worst=vals.get("k_worst", 1), k_add=vals.get("k_add"),
    )
    cfg = ExperimentConfig(
        params=params,
        topology=raw.get("topology", "random"),
        rewire_p=vals.get("rewire_p", 0.5),
        seed_component=vals.get("seed_component", 20),
        rounds=vals.get("rounds", 256),
        repetitions=vals.get("repetitions", 20),
        seed=vals.get("seed", 0),
        weights=raw.get("weights", "uniform"),
        output_dir=raw.get("output_dir", "results"),
        stability_window=vals.get("stability_window", 64),
        workers=vals.get("workers", 1),
    )
    return validate_config(cfg)


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    bad = []
    if cfg.repetitions < 1:
        bad.append("repetitions")
    if cfg.rounds < 0:
        bad.append("rounds")
    if cfg.topology not in TOPOLOGIES:
        bad.append("topology")
    if not 0 <= cfg.rewire_p <= 1:
        bad.append("rewire_p")
    if cfg.weights not in WEIGHT_SCHEMES:
        bad.append("weights")
    if cfg.stability_window < 1:
        bad.append("stability_window")
    if cfg.workers < 1:
        bad.append("workers")
    if cfg.seed < 0:
        bad.append("seed")
    if bad:
        raise ValidationError(f"invalid config values: {', '.join(bad)}", bad)
    p = cfg.params
    ans = regime_oracle(p.n, p.m, p.d, p.d_in, p.tie_rule)
    warnings = []
    for label, value in (("miner-stable", ans.miner_stable), ("network-stable", ans.network_stable)):
        if value.value != "Exists":
            warnings.append(f"{label} topology: {value.value} ({', '.join(ans.citations)})")
    return replace(cfg, warnings=tuple(warnings))


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# -- execution -----------------------------------------------------------------

def repetition_seed(seed: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(rep,))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".12g")


def _row(metrics: RoundMetrics, stable: Optional[int]) -> List:
    return [
        metrics.round, metrics.avg_score_all, metrics.avg_score_miners,
        metrics.avg_score_nonminers, metrics.diameter, metrics.miner_diameter,
        metrics.avg_eccentricity, metrics.avg_miner_eccentricity,
        metrics.edges_added, metrics.edges_dropped, stable, metrics.disconnected,
    ]


@dataclass
class RepetitionResult:
    rep: int
    rows: List[List]
    initial: str
    final: str
    histograms: Dict[str, Dict]
    stable_edges: Optional[int]


def run_repetition(cfg: ExperimentConfig, rep: int) -> RepetitionResult:
    p = cfg.params
    rng = make_rng(repetition_seed(cfg.seed, rep))
    nodes = with_weights(default_nodes(p.n, p.m), miner_weights(p.n, p.m, cfg.weights))
    g = generate(cfg.topology, p, rng, cfg.rewire_p, cfg.seed_component)
    g = _with_nodes(g, nodes)
    w = prepare_weights(g)
    W = cfg.stability_window
    initial_text = g.to_edgelist()
    indeg_initial = in_degree_distribution(g)
    indeg_miners_initial = in_degree_distribution(g, range(p.m))

    history = EdgeHistory(g.edge_pairs())
    rows = [_row(round_metrics(g, 0, w), None)]

    def record(graph: PeerGraph, report, metrics):
        history.update(graph.edge_pairs(), report.round)
        stable = empirical_stability(history, W)[1] if history.covered >= W else None
        rows.append(_row(metrics, stable))

    run_simulation(p, g, cfg.rounds, rng, weights=w, on_round=record)
    stable_final = empirical_stability(history, W)[1] if history.covered >= W else None
    hist = {
        "indeg_initial": indeg_initial,
        "indeg_final": in_degree_distribution(g),
        "indeg_miners_initial": indeg_miners_initial,
        "indeg_miners_final": in_degree_distribution(g, range(p.m)),
        "score_final": score_distribution(all_scores(g, w)),
    }
    return RepetitionResult(rep, rows, initial_text, g.to_edgelist(), hist, stable_final)


def _with_nodes(g: PeerGraph, nodes) -> PeerGraph:
    out = PeerGraph(g.params, nodes)
    for rec in g.edges():
        out._insert_record(rec)
    return out


@dataclass
class AggregateSeries:
    """Per-round means across repetitions (round 0 is the initial graph)."""

    columns: Tuple[str, ...]
    means: Dict[str, List[Optional[Fraction]]]
    histograms: List[Dict[str, Dict]]

    def __len__(self):
        return len(self.means["round"])


def aggregate(results: Sequence[RepetitionResult]) -> AggregateSeries:
    rounds = len(results[0].rows)
    means: Dict[str, List] = {c: [] for c in COLUMNS}
    for r in range(rounds):
        for ci, col in enumerate(COLUMNS):
            vals = [res.rows[r][ci] for res in results]
            if col == "round":
                means[col].append(vals[0])
            elif any(v is None for v in vals):
                means[col].append(None)
            else:
                means[col].append(sum(Fraction(v) for v in vals) / len(vals))
    return AggregateSeries(COLUMNS, means, [res.histograms for res in results])


def _header(cfg: ExperimentConfig) -> str:
    return f"# greedy-peering metrics schema v{SCHEMA_VERSION}; {cfg.params.header()[2:]}\n"


def _write_csv(path: Path, header: str, rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header)
        fh.write(",".join(COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def output_dir(cfg: ExperimentConfig) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or cfg.output_dir)


def run_experiment(cfg: ExperimentConfig, out: Optional[Path] = None) -> AggregateSeries:
    """Run every repetition, write artifacts and return the aggregate series.

    Files written to the output directory:
    ``rep_XXX.csv`` per repetition, ``aggregate.csv``, ``rep_XXX_initial.edges``
    and ``rep_XXX_final.edges``, ``histograms.csv`` and ``stability.txt``.
    """
    out = Path(out) if out is not None else output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    reps = range(cfg.repetitions)
    if cfg.workers > 1 and cfg.repetitions > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run_repetition, [cfg] * cfg.repetitions, reps))
    else:
        results = [run_repetition(cfg, r) for r in reps]

    header = _header(cfg)
    for res in results:
        _write_csv(out / f"rep_{res.rep:03d}.csv", header, res.rows)
        (out / f"rep_{res.rep:03d}_initial.edges").write_text(res.initial)
        (out / f"rep_{res.rep:03d}_final.edges").write_text(res.final)
    series = aggregate(results)
    agg_rows = [[series.means[c][r] for c in COLUMNS] for r in range(len(series))]
    _write_csv(out / "aggregate.csv", header, agg_rows)

    with open(out / "histograms.csv", "w") as fh:
        fh.write("rep,kind,key,count\n")
        for res in results:
            for kind, hist in res.histograms.items():
                for key in sorted(hist):
                    fh.write(f"{res.rep},{kind},{_fmt(key) if kind.startswith('score') else key},{hist[key]}\n")

    with open(out / "stability.txt", "w") as fh:
        fh.write("# empirical stability is a finite-window proxy, not a proof of stability\n")
        fh.write(f"window={cfg.stability_window}\n")
        for res in results:
            value = "" if res.stable_edges is None else res.stable_edges
            fh.write(f"rep={res.rep} stable_edges={value}\n")
        for w in cfg.warnings:
            fh.write(f"warning={w}\n")
    (out / "config.txt").write_text(cfg.to_text())
    return series
