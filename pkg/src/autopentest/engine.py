"""MAPE-K control loop driving scans and attacks against a managed system.

One logical controller owns the knowledge base. Actions run concurrently in
the managed system; their completions are consumed one at a time, and each
consumed completion is one adaptation step.
"""
from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Protocol

from .errors import MalformedRepertoireError
from .knowledge import (
    Event,
    EventKind,
    KnowledgeBase,
    available_attacks,
    available_scans,
    transition,
)
from .model import AttackTactic, PentestState, ScanTemplate, goal_reached
from .planner import PlannerConfig, has_viable_attack, next_move
from .simenv.scenario import Repertoire, Scenario, check_repertoire
from .simenv.simulator import Completion, GroundTruthOracle, Simulator
from .utility import (
    DEFAULT_VALUES,
    DEFAULT_WEIGHTS,
    StrategyMemory,
    ValueTables,
    WeightConfig,
    attack_utility,
    memory_update,
    scan_utility,
)

DEFAULT_SEED = 1729


class HaltReason(str, Enum):
    EXHAUSTED = "exhausted"      # nothing left to try and nothing running
    QUIESCENT = "quiescent"      # untried actions remain but none can be dispatched
    STEP_CAP = "step-cap"        # safety net tripped; abnormal


class ManagedSystemPort(Protocol):
    now_ms: int

    def start_scan(self, scan: ScanTemplate, state: PentestState) -> Completion: ...

    def start_attack(self, tactic: AttackTactic, state: PentestState) -> Completion: ...

    def next_completion(self) -> Completion | None: ...


@dataclass(frozen=True)
class EngineConfig:
    planner: PlannerConfig = PlannerConfig()
    # None means 10 * (|attacks| + |scans|).
    step_cap: int | None = None
    # Keep attacking components after their root capability is held.
    exhaustive: bool = False
    weights: WeightConfig = DEFAULT_WEIGHTS
    values: ValueTables = DEFAULT_VALUES


@dataclass
class EngineTrace:
    records: list[dict]
    final_kb: KnowledgeBase
    halt_reason: HaltReason
    steps: int
    goal_reached: bool
    scenario: Scenario
    repertoire: Repertoire
    # Wall-clock seconds per phase invocation; kept out of the journal so
    # journals stay byte-identical between equal runs.
    phase_timings: list[tuple[str, float]] = field(default_factory=list)

    @property
    def abnormal(self) -> bool:
        return self.halt_reason is HaltReason.STEP_CAP

    @property
    def final_state(self) -> PentestState:
        return self.final_kb.state

    def journal(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records)

    def events(self) -> list[Event]:
        return [Event.from_dict(r) for r in self.records if r["type"] == "event"]

    def completions(self) -> list[dict]:
        return [r for r in self.records if r["type"] == "complete"]

    def final_utility(self) -> float:
        return math.fsum(r["utility"] for r in self.completions() if r["success"])


def action_catalog(repertoire: Repertoire) -> dict:
    catalog = {}
    for tactic in repertoire.attacks:
        catalog[tactic.id] = {
            "kind": tactic.kind.value,
            "target": tactic.target,
            "interfaces": list(tactic.interfaces),
            "requires": sorted(tactic.external_requirements),
        }
    for scan in repertoire.scans:
        catalog[scan.id] = {
            "kind": "scan",
            "target": scan.component,
            "interfaces": [],
            "requires": sorted(scan.requires),
        }
    return catalog


class Engine:
    def __init__(self, scenario: Scenario, repertoire: Repertoire, config: EngineConfig = EngineConfig(),
                 seed: int = DEFAULT_SEED, port: ManagedSystemPort | None = None):
        problems = check_repertoire(scenario, repertoire, unused_rules=False)
        if problems:
            raise MalformedRepertoireError("; ".join(str(p) for p in problems))
        self.scenario = scenario
        self.repertoire = repertoire
        self.config = config
        self.seed = seed
        self.port = port if port is not None else Simulator(scenario, seed)
        self.rng = random.Random(f"ties:{seed}")
        self.kb = KnowledgeBase.create(
            repertoire.attacks, repertoire.scans,
            memory=StrategyMemory(weights=config.weights, values=config.values),
            architecture=scenario.architecture,
        )
        n_actions = len(repertoire.attacks) + len(repertoire.scans)
        self.step_cap = config.step_cap if config.step_cap is not None else max(1, 10 * n_actions)
        self.records: list[dict] = []
        self.phase_timings: list[tuple[str, float]] = []
        self.step = 0
        self.halt: HaltReason | None = None
        self._dispatch_utility: dict[str, float] = {}
        self._earned: list[float] = []

    # ------------------------------------------------------------ bookkeeping

    def _log(self, record_type: str, **fields) -> None:
        record = {"seq": len(self.records), "t_ms": self.port.now_ms, "type": record_type}
        record.update(fields)
        self.records.append(record)

    def _apply(self, event: Event) -> None:
        self.kb = transition(self.kb, event)
        self._log("event", **event.to_dict())

    def _enter(self, phase: str) -> float:
        self._log("phase", phase=phase, step=self.step)
        return time.perf_counter()

    def _leave(self, phase: str, started: float) -> None:
        self.phase_timings.append((phase, time.perf_counter() - started))

    def _refresh_targets(self, release_stalled: bool) -> None:
        kb = self.kb
        if not self.config.exhaustive:
            arch = self.scenario.architecture
            for comp in sorted(kb.state.known_components - kb.exploited_targets):
                if arch.component(comp).root_capabilities & kb.state.capabilities:
                    self._apply(Event(EventKind.TARGET_EXPLOITED, comp))
        if release_stalled:
            for comp in sorted(self.kb.active_targets):
                busy = any(self.kb.attacks[a].target == comp for a in self.kb.active_attacks)
                if not busy and not has_viable_attack(self.kb, comp):
                    self._apply(Event(EventKind.TARGET_RELEASED, comp))

    def _dispatch_scan(self, scan: ScanTemplate) -> None:
        self._apply(Event(EventKind.SCAN_STARTED, scan.id))
        completion = self.port.start_scan(scan, self.kb.state)
        u = self.kb.memory.utility_of(scan.id)
        if u is None:
            u = scan_utility(scan.factors, self.config.weights, self.config.values)
        self._dispatch_utility[scan.id] = u
        self._log("dispatch", action=scan.id, kind="scan", complete_ms=completion.complete_ms, utility=u)

    def _dispatch_attack(self, tactic: AttackTactic) -> None:
        self._apply(Event(EventKind.ATTACK_STARTED, tactic.id))
        completion = self.port.start_attack(tactic, self.kb.state)
        u = self.kb.memory.utility_of(tactic.id)
        if u is None:
            u = attack_utility(tactic.factors, self.config.weights, self.config.values)
        self._dispatch_utility[tactic.id] = u
        self._log("dispatch", action=tactic.id, kind="attack", complete_ms=completion.complete_ms, utility=u)

    def _account(self, completion: Completion, success: bool) -> None:
        u = self._dispatch_utility[completion.action_id]
        if success:
            self._earned.append(u)
        record = {
            "step": self.step, "action": completion.action_id, "kind": completion.kind,
            "dispatch_ms": completion.dispatch_ms, "complete_ms": completion.complete_ms,
            "success": success, "steps": completion.steps_succeeded,
            "components": sorted(completion.components), "interfaces": sorted(completion.interfaces),
            "capabilities": sorted(completion.capabilities), "utility": u,
        }
        if completion.error:
            record["error"] = completion.error
        self._log("complete", **record)

    def _snapshot(self) -> None:
        self._log("state", step=self.step, state=self.kb.state.to_dict(),
                  cumulative_utility=math.fsum(self._earned))

    def _nothing_left(self) -> bool:
        kb = self.kb
        return (not available_attacks(kb) and not available_scans(kb)
                and not kb.active_attacks and not kb.active_scans)

    # ------------------------------------------------------------ phases

    def monitor_run(self, new_scans: Iterable[ScanTemplate]) -> None:
        started = self._enter("monitor_run")
        for scan in new_scans:
            self._dispatch_scan(scan)
        self._leave("monitor_run", started)
        self.analysis_run()

    def monitor_control(self, completion: Completion) -> None:
        started = self._enter("monitor_control")
        self._apply(Event(EventKind.SCAN_COMPLETED, completion.action_id,
                          components=completion.components, interfaces=completion.interfaces,
                          capabilities=completion.capabilities))
        self._account(completion, success=not completion.error)
        self._snapshot()
        kb = self.kb
        keep_going = (bool(kb.active_scans) or len(kb.completed_scans) < len(kb.scans)
                      or bool(kb.active_attacks) or len(kb.attempted_attacks) < len(kb.attacks))
        self._leave("monitor_control", started)
        if keep_going:
            self.analysis_run()

    def analysis_run(self) -> None:
        started = self._enter("analysis_run")
        self._refresh_targets(release_stalled=True)
        memory = memory_update(self.kb.memory, self.kb, self.rng)
        self.kb = self.kb.with_memory(memory)
        self._log("rankings",
                  targets=[[c, u] for c, u in memory.target_ranking],
                  attacks=[[a, u] for a, u in memory.attack_ranking],
                  scans=[[s, u] for s, u in memory.scan_ranking])
        self._leave("analysis_run", started)
        self.planning_run()

    def planning_run(self) -> None:
        started = self._enter("planning_run")
        move = next_move(self.kb.memory, self.kb, self.config.planner)
        for event in move.events:
            self._log("event", **event.to_dict())
        self.kb = move.kb
        self._leave("planning_run", started)
        self.execution_run(move.attacks, move.scans)

    def execution_run(self, attacks: Iterable[AttackTactic], scans: Iterable[ScanTemplate]) -> None:
        started = self._enter("execution_run")
        for tactic in attacks:
            self._dispatch_attack(tactic)
        for scan in scans:
            self._dispatch_scan(scan)
        self._leave("execution_run", started)

    def execution_control(self, completion: Completion) -> None:
        started = self._enter("execution_control")
        kind = EventKind.ATTACK_SUCCEEDED if completion.success else EventKind.ATTACK_FAILED
        self._apply(Event(kind, completion.action_id, capabilities=completion.capabilities))
        self._account(completion, success=completion.success)
        self._snapshot()
        self._refresh_targets(release_stalled=False)
        done = self._nothing_left()
        self._leave("execution_control", started)
        if done:
            self._finish(HaltReason.EXHAUSTED)
        else:
            self.monitor_run(())

    def _finish(self, reason: HaltReason) -> None:
        self.halt = reason
        reached = goal_reached(self.kb.state, self.repertoire.attacks, self.repertoire.scans,
                               GroundTruthOracle(self.scenario))
        self._log("halt", reason=reason.value, step=self.step, goal_reached=reached,
                  state=self.kb.state.to_dict(), cumulative_utility=math.fsum(self._earned))

    # ------------------------------------------------------------ driver

    def run(self) -> EngineTrace:
        planner = self.config.planner
        self._log("header", seed=self.seed, scenario=self.scenario.name,
                  config={"targets": planner.max_targets, "attacks": planner.max_attacks,
                          "scans": planner.scan_budget, "exhaustive": self.config.exhaustive,
                          "step_cap": self.step_cap},
                  actions=action_catalog(self.repertoire),
                  hidden=sorted(c.id for c in self.scenario.architecture.capabilities.values() if c.hidden),
                  flags=sorted(self.scenario.flags))
        self.monitor_run(())
        while self.halt is None:
            completion = self.port.next_completion()
            if completion is None:
                self._finish(HaltReason.EXHAUSTED if self._nothing_left() else HaltReason.QUIESCENT)
                break
            self.step += 1
            if self.step > self.step_cap:
                self.step -= 1
                self._finish(HaltReason.STEP_CAP)
                break
            if completion.kind == "scan":
                self.monitor_control(completion)
            else:
                self.execution_control(completion)
        halt_record = self.records[-1]
        return EngineTrace(
            records=self.records, final_kb=self.kb, halt_reason=self.halt, steps=self.step,
            goal_reached=halt_record["goal_reached"], scenario=self.scenario, repertoire=self.repertoire,
            phase_timings=self.phase_timings,
        )


def run_pentest(scenario: Scenario, repertoire: Repertoire | None = None, config: EngineConfig = EngineConfig(),
                seed: int = DEFAULT_SEED) -> EngineTrace:
    """Validate inputs, run the loop to a halt and return the full trace."""
    if repertoire is None:
        if scenario.repertoire is None:
            raise MalformedRepertoireError("no repertoire given and the scenario carries none")
        repertoire = scenario.repertoire
    return Engine(scenario, repertoire, config, seed).run()
