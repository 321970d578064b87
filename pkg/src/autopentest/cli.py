"""Command-line front end.

Exit codes: 0 clean halt, 1 input error, 2 abnormal halt (step cap reached).
"""
from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from pathlib import Path
from typing import Sequence

from .engine import DEFAULT_SEED, EngineConfig, run_pentest
from .errors import PentestError
from .planner import PlannerConfig
from .report import (
    build_graph,
    build_report,
    export_dot,
    merge_graphs,
    phase_timing_csv,
    series_csv,
    timing_csv,
    timing_rows,
    utility_series,
)
from .simenv.scenario import (
    BUNDLED,
    Repertoire,
    Scenario,
    bundled_path,
    check_repertoire,
    load_repertoire,
    load_scenario,
    read_document,
)
from .utility import load_weight_config

OUT_ENV = "AUTOPENTEST_OUT"
DEFAULT_OUT = "pentest-out"

EXIT_OK, EXIT_INPUT, EXIT_ABNORMAL = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not abnormal halts
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    if text == "random":
        return secrets.randbelow(2**31)
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}") from None


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _resolve(path_or_name: str, kind: str) -> Path:
    path = Path(path_or_name)
    if path.exists():
        return path
    if path_or_name in BUNDLED:
        return bundled_path(path_or_name, kind)
    raise InputError(f"{path_or_name}: file not found")


def _load_inputs(args) -> tuple[Scenario, Repertoire]:
    scenario_path = _resolve(args.scenario, "scenario")
    scenario = load_scenario(scenario_path)
    if args.repertoire is not None:
        repertoire = load_repertoire(_resolve(args.repertoire, "repertoire"))
    elif scenario.repertoire is not None:
        repertoire = scenario.repertoire
    elif args.scenario in BUNDLED and not Path(args.scenario).exists():
        repertoire = load_repertoire(bundled_path(args.scenario, "repertoire"))
    else:
        raise InputError(f"{args.scenario}: no repertoire given")
    problems = check_repertoire(scenario, repertoire, unused_rules=False)
    if problems:
        raise InputError("; ".join(str(p) for p in problems))
    return scenario, repertoire


def _config(args, exhaustive: bool) -> EngineConfig:
    extra = {}
    if args.weights:
        weights, values = load_weight_config(args.weights)
        extra = {"weights": weights, "values": values}
    planner = PlannerConfig(max_targets=args.targets, max_attacks=args.attacks, max_scans=args.scans)
    return EngineConfig(planner=planner, step_cap=args.step_cap, exhaustive=exhaustive, **extra)


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def cmd_run(args) -> int:
    scenario, repertoire = _load_inputs(args)
    trace = run_pentest(scenario, repertoire, _config(args, args.exhaustive), args.seed)
    out = Path(args.out)
    report = build_report(trace)
    _write(out, "report.json", _dump(report))
    _write(out, "trace.jsonl", trace.journal())
    _write(out, "graph.dot", export_dot(build_graph(trace)))
    _write(out, "utility.csv", series_csv(utility_series(trace)))
    _write(out, "timing.csv", timing_csv(timing_rows(trace)))
    if args.phase_timings:
        _write(out, "phase_timing.csv", phase_timing_csv(trace.phase_timings))
    K = report["final_state"].get("K", [])
    print(f"halt: {report['halt_reason']} after {report['steps']} steps; "
          f"{len(K)} capabilities; goal reached: {report['goal_reached']}; output in {out}")
    return EXIT_ABNORMAL if trace.abnormal else EXIT_OK


def cmd_exhaustive(args) -> int:
    if args.runs < 1:
        raise InputError(f"--runs must be >= 1, got {args.runs}")
    scenario, repertoire = _load_inputs(args)
    config = _config(args, exhaustive=True)
    graphs, runs = [], []
    abnormal = False
    for k in range(args.runs):
        seed = args.seed + k
        trace = run_pentest(scenario, repertoire, config, seed)
        graphs.append(build_graph(trace))
        report = build_report(trace)
        abnormal |= trace.abnormal
        runs.append({"seed": seed, "halt_reason": report["halt_reason"], "steps": report["steps"],
                     "goal_reached": report["goal_reached"], "capabilities": report["final_state"].get("K", []),
                     "action_time_ms": report["virtual_time"]["action_time_ms"],
                     "makespan_ms": report["virtual_time"]["makespan_ms"],
                     "final_utility": report["utility"]["final"]})
    merged = merge_graphs(graphs)
    out = Path(args.out)
    _write(out, "graph.dot", export_dot(merged))
    _write(out, "report.json", _dump({"scenario": scenario.name, "runs": runs,
                                      "merged_graph": {"nodes": len(merged.nodes), "edges": len(merged.edges)}}))
    print(f"{args.runs} runs merged: {len(merged.nodes)} nodes, {len(merged.edges)} edges; output in {out}")
    return EXIT_ABNORMAL if abnormal else EXIT_OK


def _validate_one(path: Path):
    """Parse one document; returns (kind, parsed object)."""
    doc = read_document(path)
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "repertoire":
        return kind, load_repertoire(doc, source=str(path))
    if kind == "weights":
        return kind, load_weight_config(doc)
    if kind in ("scenario", "mdp"):
        return kind, load_scenario(doc, source=str(path))
    raise InputError(f"{path}: kind: expected scenario, repertoire, mdp or weights, got {kind!r}")


def cmd_validate(args) -> int:
    failures = 0
    scenarios, repertoires = [], []
    for name in args.paths:
        try:
            path = _resolve(name, "scenario")
            kind, parsed = _validate_one(path)
        except (PentestError, InputError) as exc:
            failures += 1
            print(str(exc), file=sys.stderr)
            continue
        if kind in ("scenario", "mdp"):
            scenarios.append(parsed)
        elif kind == "repertoire":
            repertoires.append((path, parsed))
        print(f"{path}: ok")
    # cross-check only when the pairing is unambiguous
    if len(scenarios) == 1:
        for path, repertoire in repertoires:
            for problem in check_repertoire(scenarios[0], repertoire):
                failures += 1
                print(f"{path}: {problem}", file=sys.stderr)
    return EXIT_INPUT if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="autopentest", description="Autonomous penetration testing against simulated targets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, exhaustive_flag: bool):
        p.add_argument("scenario", help=f"scenario file, MDP file, or bundled name ({', '.join(BUNDLED)})")
        p.add_argument("repertoire", nargs="?", help="repertoire file (defaults to the bundled one)")
        p.add_argument("--targets", type=_count, default=1, help="concurrent targets (default 1)")
        p.add_argument("--attacks", type=_count, default=1, help="concurrent attacks (default 1)")
        p.add_argument("--scans", type=_count, default=None, help="concurrent scans (default: --attacks)")
        p.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                       help=f"integer seed or 'random' (default {DEFAULT_SEED})")
        p.add_argument("--out", default=os.environ.get(OUT_ENV, DEFAULT_OUT),
                       help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        p.add_argument("--step-cap", type=_count, default=None,
                       help="max adaptation steps (default 10 x number of actions)")
        p.add_argument("--weights", help="weights/value-table override file")
        if exhaustive_flag:
            p.add_argument("--exhaustive", action="store_true",
                           help="keep attacking components after root is held")
            p.add_argument("--phase-timings", action="store_true",
                           help="also write wall-clock phase timings (not reproducible)")

    run = sub.add_parser("run", help="run one pentest")
    common(run, exhaustive_flag=True)
    run.set_defaults(func=cmd_run)

    exh = sub.add_parser("exhaustive", help="run several seeds in exhaustive mode and merge the graphs")
    common(exh, exhaustive_flag=False)
    exh.add_argument("--runs", type=int, default=16, help="number of seeded runs (default 16)")
    exh.set_defaults(func=cmd_exhaustive)

    val = sub.add_parser("validate", help="validate scenario, repertoire, MDP and weights files")
    val.add_argument("paths", nargs="+")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PentestError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
