import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from greedy_peering.analysis import (
    EdgeHistory,
    Existence,
    NashMode,
    check_stability_consequences,
    check_structural_stability,
    empirical_stability,
    find_miner_core,
    regime_oracle,
    verify_nash,
)
from greedy_peering.constructions import (
    build_capped_general_nash,
    build_capped_unit_nash,
    build_stable_topology,
    build_uncapped_nash,
    gen_miner_clique,
    gen_random,
)
from greedy_peering.errors import BudgetExceeded, HistoryTooShort
from greedy_peering.graph import GameParams, PeerGraph, TieRule, graph_from_edges
from greedy_peering.metrics import all_scores
from greedy_peering.protocol import make_rng, run_simulation

from oracles import brute_force_deviation, directed_pairs, floyd_warshall, oracle_score
from strategies import graphs, random_graph

E, I, U = Existence.EXISTS, Existence.IMPOSSIBLE, Existence.UNKNOWN


# -- Nash verification --------------------------------------------------------

def test_two_node_graph_is_nash():
    g = graph_from_edges(GameParams(n=2, m=2, d=1), [(0, 1)])
    v = verify_nash(g)
    assert v.is_nash and v.witness is None


def test_uncapped_equilibrium_is_nash():
    v = verify_nash(build_uncapped_nash(12, 4, 2), mode="exhaustive")
    assert v.is_nash
    assert v.mode is NashMode.EXHAUSTIVE and v.actions_examined > 0


def test_perturbed_uncapped_equilibrium():
    g = build_uncapped_nash(12, 4, 2)
    v = 7
    dst = sorted(g.out_edges[v])[-1]
    assert dst < 4
    g.remove_edge(v, dst)
    g.add_edge(v, 11)
    verdict = verify_nash(g)
    assert not verdict.is_nash
    w = verdict.witness
    assert w.new_score < w.old_score
    assert any(x < g.m for x in w.action)
    # cross-check against an independent recomputation
    others = [(s, t) for s, t in directed_pairs(g) if s != w.node]
    dist = floyd_warshall(g.n, others + [(w.node, x) for x in w.action])
    assert oracle_score(dist, w.node, g.m) == w.new_score
    old, best = brute_force_deviation(g, w.node)
    assert old == w.old_score and best is not None


def _first_deviator(g, capped):
    for u in range(g.n):
        old, best = brute_force_deviation(g, u, capped)
        if best is not None:
            return u, old
    return None, None


def _check_against_oracle(g, capped):
    verdict = verify_nash(g, capped=capped)
    u, old = _first_deviator(g, capped)
    assert verdict.is_nash == (u is None)
    if u is not None:
        w = verdict.witness
        assert w.node == u and w.old_score == old
        others = [(s, t) for s, t in directed_pairs(g) if s != u]
        new = oracle_score(floyd_warshall(g.n, others + [(u, x) for x in w.action]), u, g.m)
        assert new == w.new_score < old
        assert len(w.action) <= g.d and len(set(w.action)) == len(w.action)
        assert all(u not in g.out_edges[x] and x != u for x in w.action)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(graphs(max_n=7, max_d=2))
def test_nash_matches_brute_force(g):
    _check_against_oracle(g, capped=False)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(graphs(max_n=7, max_d=2, capped=True))
def test_capped_nash_matches_brute_force(g):
    _check_against_oracle(g, capped=True)


def test_caps_block_deviation():
    # 3 and 4 would jump to miner 0, which is full; 1 is full too, but the
    # slot held by the deviating node itself counts as free
    params = GameParams(n=5, m=1, d=1, d_in=2)
    g = graph_from_edges(params, [(1, 0), (2, 0), (3, 1), (4, 1)])
    assert verify_nash(g, capped=True).is_nash
    w = verify_nash(g, capped=False).witness
    assert (w.node, w.action) == (3, (0,))


def test_equilibria_known_nash():
    assert verify_nash(build_capped_unit_nash(2, 2, 1)).is_nash
    assert verify_nash(build_capped_unit_nash(3, 2, 0)).is_nash


def test_single_swap_implies_exhaustive():
    rnd = random.Random(11)
    negatives = 0
    for i in range(50):
        n = rnd.randint(3, 9)
        g = random_graph(n, rnd.randint(1, n), rnd.randint(1, 2), rnd.randrange(2 ** 32),
                         rnd.choice([0.3, 1.0]))
        swap = verify_nash(g, mode="single_swap")
        full = verify_nash(g, mode="exhaustive")
        if not swap.is_nash:
            negatives += 1
            assert not full.is_nash
    assert negatives > 10


def test_budget_exceeded():
    g, _ = build_capped_general_nash(3, 2, 512)
    with pytest.raises(BudgetExceeded) as exc:
        verify_nash(g, mode="exhaustive", budget=1000)
    assert exc.value.nodes_checked >= 0 and exc.value.actions_examined <= 1000


def test_report_format():
    text = verify_nash(build_uncapped_nash(8, 2, 1)).report()
    assert text.splitlines()[0] == "is_nash=true"


# -- structural stability ----------------------------------------------------------

def test_miner_clique_verdict():
    g = gen_miner_clique(GameParams(n=30, m=5, d=10), 0)
    v = check_structural_stability(g)
    assert v.miner_clique and v.structural_miner_stable


def test_core_graph_not_network_stable():
    g = build_stable_topology(200, 20, 8, TieRule.LIFO)
    v = check_structural_stability(g)
    assert v.structural_miner_stable and not v.structural_network_stable
    assert not v.miner_clique
    assert find_miner_core(g) == tuple(range(7))


def test_random_graph_not_stable():
    g = gen_random(GameParams(n=50, m=5, d=4), 9)
    v = check_structural_stability(g)
    assert not (v.miner_clique or v.structural_miner_stable or v.structural_network_stable)


@pytest.mark.parametrize("rule, expected", [("lifo", True), ("global", True), ("fifo", False), ("random", False)])
def test_network_stability_depends_on_rule(rule, expected):
    g = build_stable_topology(20, 3, 5, TieRule.LIFO)
    g = g.with_params(GameParams(20, 3, 5, tie_rule=TieRule.parse(rule)))
    assert check_structural_stability(g).structural_network_stable is expected


def test_fifo_core_not_miner_stable():
    g = build_stable_topology(200, 20, 8, TieRule.LIFO)
    g = g.with_params(GameParams(200, 20, 8, tie_rule=TieRule.FIFO))
    assert not check_structural_stability(g).structural_miner_stable


@pytest.mark.parametrize("n, m, d, rule", [
    (30, 5, 3, TieRule.LIFO), (30, 5, 5, TieRule.GLOBAL), (200, 20, 8, TieRule.LIFO),
    (100, 9, 4, TieRule.GLOBAL), (40, 3, 3, TieRule.LIFO),
])
def test_min_score_miners(n, m, d, rule):
    # miner-stable with m >= d: at least d-1 miners sit at (m-1)/m
    g = build_stable_topology(n, m, d, rule)
    assert check_structural_stability(g).structural_miner_stable
    scores = all_scores(g)
    assert sum(1 for j in range(m) if scores[j] == Fraction(m - 1, m)) >= d - 1


# -- consequences --------------------------------------------------------------

def test_uncapped_equilibrium_consequences():
    audit = check_stability_consequences(build_uncapped_nash(20, 5, 3))
    assert audit.ok and audit.miner_diameter <= 2 and audit.network_diameter <= 3


def test_consequence_guard():
    # non-miner 5 touches no miner: the network bound is not asserted
    params = GameParams(n=7, m=3, d=2)
    g = graph_from_edges(params, [(0, 1), (1, 2), (2, 0), (3, 0), (4, 1), (5, 6), (6, 2)])
    audit = check_stability_consequences(g, check_structural_stability(g))
    assert not audit.network_bound_checked and audit.ok


def test_stable_topologies_pass_audit():
    for args in [(30, 5, 3, "lifo"), (200, 20, 8, "lifo"), (20, 3, 5, "global")]:
        g = build_stable_topology(*args)
        assert check_stability_consequences(g, check_structural_stability(g)).ok


# -- empirical stability -------------------------------------------------------

def test_constant_history_stable():
    snaps = [{(0, 1), (1, 2)}] * 10
    flags, count = empirical_stability(EdgeHistory.from_snapshots(snaps), window=5)
    assert all(flags.values()) and count == 2


def test_toggling_edge_unstable():
    snaps = [{(0, 1)} | ({(1, 2)} if r % 2 else set()) for r in range(10)]
    flags, count = empirical_stability(EdgeHistory.from_snapshots(snaps), window=5)
    assert flags[(0, 1)] and not flags[(1, 2)]
    assert count == 1


def test_history_too_short():
    with pytest.raises(HistoryTooShort):
        empirical_stability(EdgeHistory.from_snapshots([{(0, 1)}] * 4), window=5)


def test_miner_clique_run_stable_pairs():
    params = GameParams(n=30, m=5, d=10)
    g = gen_miner_clique(params, 3)
    history = EdgeHistory(g.edge_pairs())
    run_simulation(params, g, 100, make_rng(3), collect_metrics=False,
                   on_round=lambda gr, rep, _: history.update(gr.edge_pairs(), rep.round))
    flags, _ = empirical_stability(history, 64)
    for pair in itertools.combinations(range(5), 2):
        assert flags[pair]


# -- regime oracle --------------------------------------------------------------

def test_regime_examples():
    assert regime_oracle(1000, 16, 8, None, "lifo").line() == "miner_stable=Exists network_stable=Impossible"
    a = regime_oracle(1000, 16, 8, None, "fifo")
    assert (a.miner_stable, a.network_stable) == (I, I)
    a = regime_oracle(200, 5, 8, None, "random")
    assert (a.miner_stable, a.network_stable) == (E, I)


def test_regime_guard_and_case_two_size():
    a = regime_oracle(100, 5, 8, None, "random")
    assert a.network_stable is U and a.citations
    # the single size that could still hold a stable topology: (m/2)(m+1)/(m-d+1)
    m, d = 5, 3
    n = Fraction(m, 2) * (m + 1) / (m - d + 1)
    assert n.denominator == 1
    assert regime_oracle(int(n), m, d, None, "fifo").network_stable is U


def test_regime_capped():
    assert regime_oracle(100, 3, 4, 6, "fifo").miner_stable is E
    assert regime_oracle(100, 10, 4, 8, "lifo").miner_stable is E  # 10 <= 8 + 2
    assert regime_oracle(100, 11, 4, 8, "lifo").miner_stable is U
    assert regime_oracle(100, 10, 4, 8, "random").miner_stable is U


def _table_cell(rule, m, d, n):
    ordered = rule in ("lifo", "global")
    if m < 2 * d:
        net = E if ordered else (I if n > 2 * d * d else U)
        return E, net
    if ordered:
        return E, (I if n > 2 * d * d else U)
    return I, I


@pytest.mark.parametrize("rules", [("lifo", "global"), ("fifo", "random")])
@pytest.mark.parametrize("large_m", [False, True])
def test_regime_table_cells(rules, large_m):
    rnd = random.Random(hash((rules, large_m)) & 0xFFFF)
    for _ in range(20):
        d = rnd.randint(1, 12)
        m = rnd.randint(2 * d, 4 * d) if large_m else rnd.randint(1, 2 * d - 1)
        n = rnd.randint(m + 1, 4 * d * d + m + 2)
        rule = rnd.choice(rules)
        a = regime_oracle(n, m, d, None, rule)
        assert (a.miner_stable, a.network_stable) == _table_cell(rule, m, d, n)
