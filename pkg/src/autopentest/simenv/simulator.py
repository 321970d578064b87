"""Discrete-event managed system: executes scans and attacks against a scenario.

Time is virtual and kept in integer milliseconds so that sums of durations
are exact. Completions are delivered one at a time in (time, dispatch order).
"""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import Any

from ..errors import SimulatorContractError
from ..model import AttackTactic, PentestState, ScanKind, ScanTemplate
from .scenario import Scenario


def to_ms(seconds: float) -> int:
    return int(round(seconds * 1000))


class SimClock:
    """Virtual clock with a pending-event queue; FIFO among equal timestamps."""

    def __init__(self) -> None:
        self.now_ms = 0
        self._queue: list[tuple[int, int, Any]] = []
        self._seq = 0

    def schedule(self, delay_ms: int, payload: Any) -> int:
        if delay_ms < 0:
            raise ValueError("cannot schedule in the past")
        due = self.now_ms + delay_ms
        heapq.heappush(self._queue, (due, self._seq, payload))
        self._seq += 1
        return due

    def pop(self) -> tuple[int, Any] | None:
        if not self._queue:
            return None
        due, _, payload = heapq.heappop(self._queue)
        self.now_ms = due
        return due, payload

    def __len__(self) -> int:
        return len(self._queue)


@dataclass(frozen=True)
class ScanOutcome:
    components: frozenset[str] = frozenset()
    interfaces: frozenset[str] = frozenset()
    capabilities: frozenset[str] = frozenset()


@dataclass(frozen=True)
class AttackOutcome:
    success: bool
    steps_succeeded: int
    capabilities: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Completion:
    action_id: str
    kind: str  # "scan" or "attack"
    dispatch_ms: int
    complete_ms: int
    success: bool = True
    steps_succeeded: int = 0
    components: frozenset[str] = frozenset()
    interfaces: frozenset[str] = frozenset()
    capabilities: frozenset[str] = frozenset()
    error: str = ""

    @property
    def duration_ms(self) -> int:
        return self.complete_ms - self.dispatch_ms


def segment_reachable(scenario: Scenario, segment: str | None, capabilities: frozenset[str]) -> bool:
    options = scenario.reachability.get(segment or "default", ())
    return not options or any(option <= capabilities for option in options)


def execute_scan(scenario: Scenario, scan: ScanTemplate, state: PentestState) -> ScanOutcome:
    """Findings of ``scan`` given what the attacker currently holds."""
    if not scan.requires <= state.capabilities:
        missing = sorted(scan.requires - state.capabilities)
        raise SimulatorContractError(f"scan {scan.id} launched without prerequisites {missing}")
    rule = scenario.scan_rules.get(scan.id)
    if rule is None:
        return ScanOutcome()
    arch = scenario.architecture
    owner = arch.component_of_interface
    found = set()
    for iface in rule.reveals:
        vis = scenario.visibility_of(iface)
        if vis.local_only:
            visible = scan.kind is ScanKind.LOCAL and scan.component == owner[iface]
        else:
            visible = segment_reachable(scenario, vis.segment, state.capabilities)
        if visible:
            found.add(iface)
    components = {owner[i] for i in found}
    if scan.kind is ScanKind.LOCAL and scan.component is not None:
        components.add(scan.component)
    return ScanOutcome(frozenset(components), frozenset(found), rule.grants)


def execute_attack(scenario: Scenario, tactic: AttackTactic, state: PentestState,
                   rng: random.Random | None = None) -> AttackOutcome:
    """Evaluate the steps in order; the first failing step ends the tactic."""
    for step in tactic.steps:
        if step.interface is not None and step.interface not in state.known_interfaces:
            raise SimulatorContractError(f"attack {tactic.id} targets unknown interface {step.interface}")
    rule = scenario.attack_rules.get(tactic.id)
    held = set(state.capabilities)
    granted: set[str] = set()
    done = 0
    for index, step in enumerate(tactic.steps):
        if not step.requires <= held or rule is None:
            break
        p = rule.outcome_for(index).probability
        if p < 1.0:
            if p <= 0.0:
                break
            if rng is None:
                raise SimulatorContractError(f"stochastic rule for {tactic.id} needs a random source")
            if rng.random() >= p:
                break
        held |= step.grants
        granted |= step.grants
        done += 1
    return AttackOutcome(success=done == len(tactic.steps), steps_succeeded=done, capabilities=frozenset(granted))


class Simulator:
    """Managed-system port backed by a scenario and a virtual clock.

    Outcomes are decided when an action is dispatched, from the state the
    controller held at that moment, and delivered at dispatch + duration.
    """

    def __init__(self, scenario: Scenario, seed: int = 0):
        self.scenario = scenario
        self.clock = SimClock()
        self._rng = random.Random(f"outcomes:{seed}")

    @property
    def now_ms(self) -> int:
        return self.clock.now_ms

    @property
    def in_flight(self) -> int:
        return len(self.clock)

    def start_scan(self, scan: ScanTemplate, state: PentestState) -> Completion:
        duration = to_ms(self.scenario.duration_of(scan))
        error = ""
        try:
            outcome = execute_scan(self.scenario, scan, state)
        except SimulatorContractError as exc:
            outcome, error = ScanOutcome(), str(exc)
        completion = Completion(
            action_id=scan.id, kind="scan", dispatch_ms=self.now_ms, complete_ms=self.now_ms + duration,
            components=outcome.components, interfaces=outcome.interfaces,
            capabilities=outcome.capabilities, error=error,
        )
        self.clock.schedule(duration, completion)
        return completion

    def start_attack(self, tactic: AttackTactic, state: PentestState) -> Completion:
        duration = to_ms(self.scenario.duration_of(tactic))
        error = ""
        try:
            outcome = execute_attack(self.scenario, tactic, state, self._rng)
        except SimulatorContractError as exc:
            outcome, error = AttackOutcome(False, 0), str(exc)
        completion = Completion(
            action_id=tactic.id, kind="attack", dispatch_ms=self.now_ms, complete_ms=self.now_ms + duration,
            success=outcome.success, steps_succeeded=outcome.steps_succeeded,
            capabilities=outcome.capabilities, error=error,
        )
        self.clock.schedule(duration, completion)
        return completion

    def next_completion(self) -> Completion | None:
        item = self.clock.pop()
        return None if item is None else item[1]


@dataclass
class GroundTruthOracle:
    """Answers "would this action still add anything?" from scenario ground truth."""

    scenario: Scenario

    def attack_gain(self, state: PentestState, tactic: AttackTactic) -> frozenset[str]:
        if tactic.target not in state.known_components:
            return frozenset()
        for step in tactic.steps:
            if step.interface is not None and step.interface not in state.known_interfaces:
                return frozenset()
        rule = self.scenario.attack_rules.get(tactic.id)
        if rule is None:
            return frozenset()
        held = set(state.capabilities)
        gained: set[str] = set()
        for index, step in enumerate(tactic.steps):
            # any step with a non-zero chance counts as reachable
            if not step.requires <= held or rule.outcome_for(index).probability <= 0.0:
                break
            held |= step.grants
            gained |= step.grants
        return frozenset(gained)

    def scan_gain(self, state: PentestState, scan: ScanTemplate):
        if not scan.requires <= state.capabilities:
            return frozenset(), frozenset(), frozenset()
        if scan.kind is ScanKind.LOCAL and scan.component not in state.known_components:
            return frozenset(), frozenset(), frozenset()
        outcome = execute_scan(self.scenario, scan, state)
        return outcome.components, outcome.interfaces, outcome.capabilities
