"""Command-line entry point.

Exit codes: 0 success, 1 bad input or usage, 2 when an analysis comes back
negative where a positive was asked for (e.g. ``verify-nash`` finds a
deviation).
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from . import constructions as cons
from .analysis import (
    check_stability_consequences,
    check_structural_stability,
    regime_oracle,
    verify_nash,
)
from .errors import BudgetExceeded, PeeringError
from .graph import GameParams, PeerGraph, TieRule
from .harness import load_config, output_dir, run_experiment

FAMILIES = {
    "uncapped-nash": ("n m d", lambda a: cons.build_uncapped_nash(*map(int, a))),
    "capped-unit-nash": ("d_in k k'", lambda a: cons.build_capped_unit_nash(*map(int, a))),
    "capped-general-nash": ("k d n", lambda a: cons.build_capped_general_nash(*map(int, a))[0]),
    "stable-topology": ("n m d rule", lambda a: cons.build_stable_topology(int(a[0]), int(a[1]), int(a[2]), a[3])),
    "random": ("n m d seed", lambda a: cons.gen_random(GameParams(*map(int, a[:3])), int(a[3]))),
    "small-world": ("n m d p seed",
                    lambda a: cons.gen_small_world(GameParams(*map(int, a[:3])), float(a[3]), int(a[4]))),
    "scale-free": ("n m d seed_component seed",
                   lambda a: cons.gen_scale_free(GameParams(*map(int, a[:3])), int(a[3]), int(a[4]))),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_graph(path: Optional[str]) -> PeerGraph:
    if path is None or path == "-":
        text = sys.stdin.read()
    else:
        with open(path) as fh:
            text = fh.read()
    return PeerGraph.from_edgelist(text)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = args.output or output_dir(cfg)
    series = run_experiment(cfg, out)
    first, last = series.means["avg_score_all"][0], series.means["avg_score_all"][-1]
    print(f"wrote {cfg.repetitions} repetitions to {out}")
    print(f"avg_score_all round0={float(first):.6g} final={float(last):.6g}")
    return 0


def cmd_construct(args) -> int:
    usage, build = FAMILIES[args.family]
    if len(args.params) != len(usage.split()):
        print(f"construct {args.family} expects: {usage}", file=sys.stderr)
        return 1
    g = build(args.params)
    sys.stdout.write(g.to_edgelist())
    return 0


def cmd_verify_nash(args) -> int:
    g = _read_graph(args.edgelist)
    try:
        verdict = verify_nash(g, capped=args.capped, mode=args.mode, budget=args.budget)
    except BudgetExceeded as exc:
        print(f"budget_exceeded=true nodes_checked={exc.nodes_checked} "
              f"actions_examined={exc.actions_examined}")
        return 1
    print(verdict.report())
    return 0 if verdict.is_nash else 2


def cmd_check_stability(args) -> int:
    g = _read_graph(args.edgelist)
    if args.rule is not None:
        g = g.with_params(GameParams(g.n, g.m, g.d, g.params.d_in, TieRule.parse(args.rule),
                                     g.params.k_worst))
    verdict = check_structural_stability(g)
    print(verdict.report())
    audit = check_stability_consequences(g)
    print(f"miner_diameter={audit.miner_diameter}")
    print(f"network_diameter={audit.network_diameter}")
    for v in audit.violations:
        print(f"violation={v}")
    wanted = {"miner": verdict.structural_miner_stable, "network": verdict.structural_network_stable,
              "clique": verdict.miner_clique}
    if args.expect is not None and not wanted[args.expect]:
        return 2
    return 0


def cmd_regime(args) -> int:
    ans = regime_oracle(args.n, args.m, args.d, args.din, args.rule)
    print(ans.line())
    for c in ans.citations:
        print(f"citation={c}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="greedy-peering", description="Greedy peer-selection simulator and analysis tools.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="run an experiment from a key=value config file")
    s.add_argument("config")
    s.add_argument("--output", help="output directory (overrides config and environment)")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("construct", help="print a constructed graph as an edge list")
    c.add_argument("family", choices=sorted(FAMILIES))
    c.add_argument("params", nargs="*")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify-nash", help="best-response check (reads stdin without a path)")
    v.add_argument("edgelist", nargs="?")
    grp = v.add_mutually_exclusive_group()
    grp.add_argument("--capped", dest="capped", action="store_true", default=None)
    grp.add_argument("--uncapped", dest="capped", action="store_false")
    v.add_argument("--mode", default="exhaustive", choices=["exhaustive", "single_swap", "single-swap"])
    v.add_argument("--budget", type=int, default=10 ** 6)
    v.set_defaults(func=cmd_verify_nash)

    k = sub.add_parser("check-stability", help="structural stability report for an edge list")
    k.add_argument("edgelist", nargs="?")
    k.add_argument("--rule", help="override the tie rule in the edge-list header")
    k.add_argument("--expect", choices=["miner", "network", "clique"])
    k.set_defaults(func=cmd_check_stability)

    r = sub.add_parser("regime", help="which stable topologies are known to exist")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--m", type=int, required=True)
    r.add_argument("--d", type=int, required=True)
    r.add_argument("--din", type=int, default=None)
    r.add_argument("--rule", default="lifo")
    r.set_defaults(func=cmd_regime)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except (PeeringError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
