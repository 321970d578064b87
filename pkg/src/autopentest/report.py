"""Post-processing of engine traces: exploitation graphs, utility and timing series, run reports.

Everything here reads the journal records only, so a trace loaded back from
a ``trace.jsonl`` file produces the same outputs as the live trace.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

ACTION_NODE_KIND = {"scan": "S", "exploit": "E", "post-exploit": "P"}
KIND_ORDER = {"S": 0, "E": 1, "P": 2, "I": 3, "C": 4, "F": 5}
SHAPES = {"S": "ellipse", "E": "ellipse", "P": "ellipse", "I": "box", "C": "diamond", "F": "diamond"}


class PartialGraphWarning(UserWarning):
    """The trace ended without a halt record; the graph may be incomplete."""


def natural_key(text: str) -> tuple:
    return tuple(int(part) if part.isdigit() else part for part in re.split(r"(\d+)", text))


@dataclass(frozen=True)
class ExploitationGraph:
    nodes: frozenset[tuple[str, str]] = frozenset()  # (node id, kind letter)
    edges: frozenset[tuple[str, str]] = frozenset()

    @property
    def node_ids(self) -> frozenset[str]:
        return frozenset(n for n, _ in self.nodes)

    def kind_of(self, node: str) -> str:
        for n, kind in self.nodes:
            if n == node:
                return kind
        raise KeyError(node)

    def successors(self, node: str) -> list[str]:
        return sorted((d for s, d in self.edges if s == node), key=natural_key)

    def predecessors(self, node: str) -> list[str]:
        return sorted((s for s, d in self.edges if d == node), key=natural_key)


def _records(trace) -> list[dict]:
    return list(trace.records) if hasattr(trace, "records") else list(trace)


def load_journal(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def _header(records: Sequence[dict]) -> dict:
    for record in records:
        if record.get("type") == "header":
            return record
    return {"actions": {}, "hidden": [], "flags": []}


def flag_node_id(capability: str) -> str:
    return capability if capability.startswith("F") else f"F{capability}"


def build_graph(trace) -> ExploitationGraph:
    """Exploitation graph of one run.

    Hidden capabilities never appear as nodes; an action that needed one is
    linked directly to every action of the run that granted it.
    """
    records = _records(trace)
    if records and not any(r.get("type") == "halt" for r in records):
        warnings.warn("trace has no halt record; building a partial graph", PartialGraphWarning, stacklevel=2)
    header = _header(records)
    catalog = header.get("actions", {})
    hidden = set(header.get("hidden", ()))
    flags = set(header.get("flags", ()))
    nodes: set[tuple[str, str]] = set()
    edges: set[tuple[str, str]] = set()

    def cap_node(cap: str) -> str:
        if cap in flags:
            node = flag_node_id(cap)
            nodes.add((node, "F"))
        else:
            node = cap
            nodes.add((node, "C"))
        return node

    dispatched = [r for r in records if r.get("type") == "dispatch"]
    completed = [r for r in records if r.get("type") == "complete"]
    granters: dict[str, list[str]] = {}
    for record in completed:
        for cap in record["capabilities"]:
            granters.setdefault(cap, []).append(record["action"])

    for record in dispatched:
        action = record["action"]
        info = catalog.get(action, {"kind": "scan" if record["kind"] == "scan" else "exploit"})
        nodes.add((action, ACTION_NODE_KIND[info["kind"]]))
        for iface in info.get("interfaces", ()):
            nodes.add((iface, "I"))
            edges.add((iface, action))
        for req in info.get("requires", ()):
            if req in hidden:
                for granter in granters.get(req, ()):
                    if granter != action:
                        edges.add((granter, action))
            else:
                edges.add((cap_node(req), action))

    for record in completed:
        action = record["action"]
        for iface in record["interfaces"]:
            nodes.add((iface, "I"))
            edges.add((action, iface))
        for cap in record["capabilities"]:
            if cap not in hidden:
                edges.add((action, cap_node(cap)))
    return ExploitationGraph(frozenset(nodes), frozenset(edges))


def merge_graphs(graphs: Iterable[ExploitationGraph]) -> ExploitationGraph:
    nodes: set = set()
    edges: set = set()
    for g in graphs:
        nodes |= g.nodes
        edges |= g.edges
    return ExploitationGraph(frozenset(nodes), frozenset(edges))


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: ExploitationGraph, name: str = "exploitation") -> str:
    lines = [f"digraph {_quote(name)} {{"]
    for node, kind in sorted(graph.nodes, key=lambda n: (KIND_ORDER[n[1]], natural_key(n[0]))):
        lines.append(f"  {_quote(node)} [shape={SHAPES[kind]}];")
    for src, dst in sorted(graph.edges, key=lambda e: (natural_key(e[0]), natural_key(e[1]))):
        lines.append(f"  {_quote(src)} -> {_quote(dst)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def utility_series(trace) -> list[tuple[int, float]]:
    """Cumulative utility of successfully completed actions after each adaptation step."""
    series = [(0, 0.0)]
    earned: list[float] = []
    for record in _records(trace):
        if record.get("type") != "complete":
            continue
        if record["success"]:
            earned.append(record["utility"])
        series.append((record["step"], math.fsum(earned)))
    return series


def timing_rows(trace) -> list[dict]:
    rows = []
    for record in _records(trace):
        if record.get("type") == "complete":
            rows.append({
                "step": record["step"], "action": record["action"], "kind": record["kind"],
                "dispatch_ms": record["dispatch_ms"], "complete_ms": record["complete_ms"],
                "duration_ms": record["complete_ms"] - record["dispatch_ms"], "success": record["success"],
            })
    return rows


def action_time_ms(trace) -> int:
    """Sum of the virtual durations of every completed action."""
    return sum(r["duration_ms"] for r in timing_rows(trace))


def causal_path(trace, capability: str) -> list[str]:
    """Actions that first enabled ``capability``, in completion order.

    Each action is linked to the actions that first granted its prerequisites
    and first revealed the interfaces it attacks. Returns [] when the
    capability was never gained.
    """
    records = _records(trace)
    catalog = _header(records).get("actions", {})
    first_cap: dict[str, str] = {}
    first_iface: dict[str, str] = {}
    order: dict[str, int] = {}
    for record in records:
        if record.get("type") != "complete":
            continue
        order.setdefault(record["action"], len(order))
        for cap in record["capabilities"]:
            first_cap.setdefault(cap, record["action"])
        for iface in record["interfaces"]:
            first_iface.setdefault(iface, record["action"])
    if capability not in first_cap:
        return []
    seen: set[str] = set()
    stack = [first_cap[capability]]
    while stack:
        action = stack.pop()
        if action in seen:
            continue
        seen.add(action)
        info = catalog.get(action, {})
        for req in info.get("requires", ()):
            if req in first_cap:
                stack.append(first_cap[req])
        for iface in info.get("interfaces", ()):
            if iface in first_iface:
                stack.append(first_iface[iface])
    return sorted(seen, key=order.__getitem__)


def flags_captured(trace) -> list[dict]:
    records = _records(trace)
    flags = set(_header(records).get("flags", ()))
    captured: dict[str, dict] = {}
    for record in records:
        if record.get("type") == "state":
            for cap in record["state"]["K"]:
                if cap in flags and cap not in captured:
                    captured[cap] = {"flag": flag_node_id(cap), "capability": cap,
                                     "step": record["step"], "t_ms": record["t_ms"]}
    return sorted(captured.values(), key=lambda f: (f["step"], natural_key(f["flag"])))


def build_report(trace) -> dict:
    records = _records(trace)
    header = _header(records)
    halt = next((r for r in reversed(records) if r.get("type") == "halt"), None)
    completions = [r for r in records if r.get("type") == "complete"]
    series = utility_series(records)
    graph = build_graph(records)
    attacks = [r for r in completions if r["kind"] == "attack"]
    return {
        "scenario": header.get("scenario", ""),
        "seed": header.get("seed"),
        "config": header.get("config", {}),
        "halt_reason": halt["reason"] if halt else "truncated",
        "abnormal": halt is None or halt["reason"] == "step-cap",
        "steps": halt["step"] if halt else (completions[-1]["step"] if completions else 0),
        "goal_reached": halt["goal_reached"] if halt else False,
        "final_state": halt["state"] if halt else {},
        "flags_captured": flags_captured(records),
        "actions": {
            "scans": sum(1 for r in completions if r["kind"] == "scan"),
            "attacks": len(attacks),
            "succeeded": sum(1 for r in attacks if r["success"]),
            "failed": sum(1 for r in attacks if not r["success"]),
        },
        "utility": {"final": series[-1][1], "series": [[s, u] for s, u in series]},
        "virtual_time": {
            "makespan_ms": max((r["complete_ms"] for r in completions), default=0),
            "action_time_ms": action_time_ms(records),
        },
        "graph": {"nodes": len(graph.nodes), "edges": len(graph.edges)},
    }


def series_csv(series: Iterable[tuple[int, float]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["step", "cumulative_utility"])
    for step, value in series:
        writer.writerow([step, repr(value)])
    return out.getvalue()


def timing_csv(rows: Iterable[dict]) -> str:
    out = io.StringIO()
    fields = ["step", "action", "kind", "dispatch_ms", "complete_ms", "duration_ms", "success"]
    writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def phase_timing_csv(timings: Iterable[tuple[str, float]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["index", "phase", "wall_seconds"])
    for index, (phase, seconds) in enumerate(timings):
        writer.writerow([index, phase, f"{seconds:.9f}"])
    return out.getvalue()
