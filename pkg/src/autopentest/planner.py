"""Next-move selection: greedy allocation over the rankings under concurrency budgets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import ConfigurationError
from .knowledge import Event, EventKind, KnowledgeBase, transition
from .model import AttackTactic, ScanKind, ScanTemplate, is_viable
from .utility import Ranking, StrategyMemory


@dataclass(frozen=True)
class PlannerConfig:
    max_targets: int = 1
    max_attacks: int = 1
    # None means "same as max_attacks".
    max_scans: int | None = None

    def __post_init__(self):
        for name in ("max_targets", "max_attacks"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.max_scans is not None and self.max_scans < 1:
            raise ConfigurationError("max_scans must be >= 1")

    @property
    def scan_budget(self) -> int:
        return self.max_attacks if self.max_scans is None else self.max_scans


def interferes(tactic: AttackTactic, others: Iterable[AttackTactic]) -> bool:
    """Two attacks interfere when they hit the same interface or share an exclusion tag."""
    ifaces = set(tactic.interfaces)
    for other in others:
        if other.id == tactic.id:
            continue
        if ifaces.intersection(other.interfaces) or tactic.exclusion_tags & other.exclusion_tags:
            return True
    return False


def scan_interferes(scan: ScanTemplate, others: Iterable[ScanTemplate]) -> bool:
    return any(other.id != scan.id and scan.exclusion_tags & other.exclusion_tags for other in others)


def _untried(kb: KnowledgeBase, attack_id: str) -> bool:
    return attack_id not in kb.active_attacks and attack_id not in kb.attempted_attacks


def has_viable_attack(kb: KnowledgeBase, component: str) -> bool:
    return any(t.target == component and _untried(kb, t.id) and is_viable(t, kb.state)
               for t in kb.attacks.values())


def target_selection(ranking: Ranking, kb: KnowledgeBase, config: PlannerConfig) -> tuple[str, ...]:
    """Highest-ranked components that are neither active nor exploited.

    Components with no untried attack that could run now are skipped so that
    a budget slot is never spent on a target nothing can be launched against.
    """
    budget = config.max_targets - len(kb.active_targets)
    chosen: list[str] = []
    for component, _ in ranking:
        if budget <= 0:
            break
        if component in kb.exploited_targets or component in kb.active_targets or component in chosen:
            continue
        if not has_viable_attack(kb, component):
            continue
        chosen.append(component)
        budget -= 1
    return tuple(chosen)


def attack_selection(ranking: Ranking, kb: KnowledgeBase, config: PlannerConfig) -> tuple[AttackTactic, ...]:
    budget = config.max_attacks - len(kb.active_attacks)
    running = [kb.attacks[a] for a in sorted(kb.active_attacks)]
    chosen: list[AttackTactic] = []
    for attack_id, _ in ranking:
        if budget <= 0:
            break
        tactic = kb.attacks.get(attack_id)
        if tactic is None or not _untried(kb, attack_id):
            continue
        if tactic.target not in kb.active_targets:
            continue
        if not is_viable(tactic, kb.state):
            continue
        if interferes(tactic, running + chosen):
            continue
        chosen.append(tactic)
        budget -= 1
    return tuple(chosen)


def scan_admissible(scan: ScanTemplate, kb: KnowledgeBase) -> bool:
    if not scan.requires <= kb.state.capabilities:
        return False
    if scan.kind is ScanKind.LOCAL and scan.component not in kb.state.known_components:
        return False
    return True


def scan_selection(ranking: Ranking, kb: KnowledgeBase, config: PlannerConfig) -> tuple[ScanTemplate, ...]:
    budget = config.scan_budget - len(kb.active_scans)
    running = [kb.scans[s] for s in sorted(kb.active_scans)]
    chosen: list[ScanTemplate] = []
    for scan_id, _ in ranking:
        if budget <= 0:
            break
        scan = kb.scans.get(scan_id)
        if scan is None or scan_id in kb.active_scans or scan_id in kb.completed_scans:
            continue
        if not scan_admissible(scan, kb) or scan_interferes(scan, running + chosen):
            continue
        chosen.append(scan)
        budget -= 1
    return tuple(chosen)


@dataclass(frozen=True)
class NextMove:
    attacks: tuple[AttackTactic, ...]
    scans: tuple[ScanTemplate, ...]
    targets: tuple[str, ...]
    kb: KnowledgeBase
    events: tuple[Event, ...] = ()


def next_move(memory: StrategyMemory, kb: KnowledgeBase, config: PlannerConfig) -> NextMove:
    """Select targets first, then attacks against active targets, then scans."""
    targets = target_selection(memory.target_ranking, kb, config)
    events = []
    for component in targets:
        event = Event(EventKind.TARGET_ENGAGED, component)
        kb = transition(kb, event)
        events.append(event)
    attacks = attack_selection(memory.attack_ranking, kb, config)
    scans = scan_selection(memory.scan_ranking, kb, config)
    return NextMove(attacks=attacks, scans=scans, targets=targets, kb=kb, events=tuple(events))
