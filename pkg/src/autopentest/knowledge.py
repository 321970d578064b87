"""Knowledge base shared by the four adaptation phases.

The knowledge base is immutable. `transition` is the only way to move an
action or target between tracking sets; it returns a new knowledge base and
raises ProtocolError for moves the control loop must never make.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping

from .errors import ProtocolError
from .model import (
    AttackTactic,
    PentestState,
    ScanTemplate,
    SecurityInformedArchitecture,
    apply_scan_result,
)

if TYPE_CHECKING:
    from .utility import StrategyMemory


class EventKind(str, Enum):
    SCAN_STARTED = "scan-started"
    SCAN_COMPLETED = "scan-completed"
    ATTACK_STARTED = "attack-started"
    ATTACK_SUCCEEDED = "attack-succeeded"
    ATTACK_FAILED = "attack-failed"
    TARGET_ENGAGED = "target-engaged"
    TARGET_EXPLOITED = "target-exploited"
    TARGET_RELEASED = "target-released"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    subject: str
    components: frozenset[str] = frozenset()
    interfaces: frozenset[str] = frozenset()
    capabilities: frozenset[str] = frozenset()

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value, "subject": self.subject}
        for name in ("components", "interfaces", "capabilities"):
            values = getattr(self, name)
            if values:
                out[name] = sorted(values)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "Event":
        return cls(
            kind=EventKind(data["kind"]),
            subject=data["subject"],
            components=frozenset(data.get("components", ())),
            interfaces=frozenset(data.get("interfaces", ())),
            capabilities=frozenset(data.get("capabilities", ())),
        )


@dataclass(frozen=True)
class KnowledgeBase:
    state: PentestState
    attacks: Mapping[str, AttackTactic]
    scans: Mapping[str, ScanTemplate]
    memory: "StrategyMemory | None" = None
    # Ground truth used only to read properties of elements already in the
    # pentest state (interface vulnerabilities, interactions, access levels).
    architecture: SecurityInformedArchitecture | None = field(default=None, compare=False)
    active_attacks: frozenset[str] = frozenset()
    successful_attacks: frozenset[str] = frozenset()
    failed_attacks: frozenset[str] = frozenset()
    active_scans: frozenset[str] = frozenset()
    completed_scans: frozenset[str] = frozenset()
    active_targets: frozenset[str] = frozenset()
    exploited_targets: frozenset[str] = frozenset()

    @classmethod
    def create(cls, attacks: Iterable[AttackTactic] = (), scans: Iterable[ScanTemplate] = (),
               state: PentestState | None = None, memory: "StrategyMemory | None" = None,
               architecture: SecurityInformedArchitecture | None = None) -> "KnowledgeBase":
        attack_map: dict[str, AttackTactic] = {}
        for tactic in attacks:
            if tactic.id in attack_map:
                raise ProtocolError(f"duplicate attack id {tactic.id}")
            attack_map[tactic.id] = tactic
        scan_map: dict[str, ScanTemplate] = {}
        for scan in scans:
            if scan.id in scan_map or scan.id in attack_map:
                raise ProtocolError(f"duplicate action id {scan.id}")
            scan_map[scan.id] = scan
        return cls(state=state or PentestState(), attacks=attack_map, scans=scan_map,
                   memory=memory, architecture=architecture)

    def with_memory(self, memory: "StrategyMemory") -> "KnowledgeBase":
        return replace(self, memory=memory)

    @property
    def attempted_attacks(self) -> frozenset[str]:
        return self.successful_attacks | self.failed_attacks


def available_attacks(kb: KnowledgeBase) -> tuple[AttackTactic, ...]:
    taken = kb.active_attacks | kb.successful_attacks | kb.failed_attacks
    return tuple(a for aid, a in sorted(kb.attacks.items()) if aid not in taken)


def available_scans(kb: KnowledgeBase) -> tuple[ScanTemplate, ...]:
    taken = kb.active_scans | kb.completed_scans
    return tuple(s for sid, s in sorted(kb.scans.items()) if sid not in taken)


def available_targets(kb: KnowledgeBase) -> tuple[str, ...]:
    return tuple(sorted(kb.state.known_components - kb.active_targets - kb.exploited_targets))


def _require_attack(kb: KnowledgeBase, event: Event) -> AttackTactic:
    tactic = kb.attacks.get(event.subject)
    if tactic is None:
        raise ProtocolError(f"{event.kind.value}: unknown attack {event.subject!r}")
    return tactic


def _require_scan(kb: KnowledgeBase, event: Event) -> ScanTemplate:
    scan = kb.scans.get(event.subject)
    if scan is None:
        raise ProtocolError(f"{event.kind.value}: unknown scan {event.subject!r}")
    return scan


def _finish_attack(kb: KnowledgeBase, event: Event, succeeded: bool) -> KnowledgeBase:
    tactic = _require_attack(kb, event)
    if tactic.id not in kb.active_attacks:
        raise ProtocolError(f"{event.kind.value}: attack {tactic.id} is not active")
    stray = event.capabilities - tactic.grants
    if stray:
        raise ProtocolError(f"{event.kind.value}: {tactic.id} cannot grant {sorted(stray)}")
    if event.components or event.interfaces:
        raise ProtocolError(f"{event.kind.value}: attacks do not report components or interfaces")
    state = kb.state
    if not event.capabilities <= state.capabilities:
        state = replace(state, capabilities=state.capabilities | event.capabilities)
    changes: dict = {"state": state, "active_attacks": kb.active_attacks - {tactic.id}}
    if succeeded:
        changes["successful_attacks"] = kb.successful_attacks | {tactic.id}
    else:
        changes["failed_attacks"] = kb.failed_attacks | {tactic.id}
    return replace(kb, **changes)


def transition(kb: KnowledgeBase, event: Event) -> KnowledgeBase:
    """Apply one tracking-set move and return the new knowledge base."""
    kind = event.kind
    if kind is EventKind.SCAN_STARTED:
        scan = _require_scan(kb, event)
        if scan.id in kb.active_scans or scan.id in kb.completed_scans:
            raise ProtocolError(f"scan-started: scan {scan.id} already started")
        return replace(kb, active_scans=kb.active_scans | {scan.id})

    if kind is EventKind.SCAN_COMPLETED:
        scan = _require_scan(kb, event)
        if scan.id not in kb.active_scans:
            raise ProtocolError(f"scan-completed: scan {scan.id} is not active")
        state = apply_scan_result(kb.state, event.components, event.interfaces, event.capabilities)
        return replace(kb, state=state,
                       active_scans=kb.active_scans - {scan.id},
                       completed_scans=kb.completed_scans | {scan.id})

    if kind is EventKind.ATTACK_STARTED:
        tactic = _require_attack(kb, event)
        if tactic.id in kb.active_attacks or tactic.id in kb.attempted_attacks:
            raise ProtocolError(f"attack-started: attack {tactic.id} already launched")
        return replace(kb, active_attacks=kb.active_attacks | {tactic.id})

    if kind is EventKind.ATTACK_SUCCEEDED:
        return _finish_attack(kb, event, succeeded=True)

    if kind is EventKind.ATTACK_FAILED:
        return _finish_attack(kb, event, succeeded=False)

    component = event.subject
    if component not in kb.state.known_components:
        raise ProtocolError(f"{kind.value}: component {component!r} is not known")

    if kind is EventKind.TARGET_ENGAGED:
        if component in kb.active_targets or component in kb.exploited_targets:
            raise ProtocolError(f"target-engaged: {component} is already active or exploited")
        return replace(kb, active_targets=kb.active_targets | {component})

    if kind is EventKind.TARGET_EXPLOITED:
        if component in kb.exploited_targets:
            raise ProtocolError(f"target-exploited: {component} already exploited")
        return replace(kb, active_targets=kb.active_targets - {component},
                       exploited_targets=kb.exploited_targets | {component})

    if kind is EventKind.TARGET_RELEASED:
        if component not in kb.active_targets:
            raise ProtocolError(f"target-released: {component} is not active")
        return replace(kb, active_targets=kb.active_targets - {component})

    raise ProtocolError(f"unsupported event kind {kind!r}")


def replay(kb: KnowledgeBase, events: Iterable[Event]) -> KnowledgeBase:
    for event in events:
        kb = transition(kb, event)
    return kb


def check_invariants(kb: KnowledgeBase) -> list[str]:
    """Disjointness and membership checks; returns human-readable problems."""
    problems = []
    pairs = [
        ("active/successful attacks", kb.active_attacks, kb.successful_attacks),
        ("active/failed attacks", kb.active_attacks, kb.failed_attacks),
        ("successful/failed attacks", kb.successful_attacks, kb.failed_attacks),
        ("active/completed scans", kb.active_scans, kb.completed_scans),
        ("active/exploited targets", kb.active_targets, kb.exploited_targets),
    ]
    for label, left, right in pairs:
        if left & right:
            problems.append(f"{label} overlap: {sorted(left & right)}")
    attack_ids = kb.active_attacks | kb.successful_attacks | kb.failed_attacks
    if not attack_ids <= kb.attacks.keys():
        problems.append(f"unknown attacks tracked: {sorted(attack_ids - kb.attacks.keys())}")
    scan_ids = kb.active_scans | kb.completed_scans
    if not scan_ids <= kb.scans.keys():
        problems.append(f"unknown scans tracked: {sorted(scan_ids - kb.scans.keys())}")
    targets = kb.active_targets | kb.exploited_targets
    if not targets <= kb.state.known_components:
        problems.append(f"unknown targets tracked: {sorted(targets - kb.state.known_components)}")
    return problems
