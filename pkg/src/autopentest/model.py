"""Security-informed architectures, pentest state, attacks and scans.

Everything here is an immutable value. State updates return new objects;
nothing mutates in place.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Protocol

from .errors import MalformedRepertoireError, SimulatorContractError
from .factors import AttackFactors, ExploitationState, ScanFactors

#: Source endpoint used for interactions that originate at the tester's host.
ATTACKER = "attacker"


class CapabilityClass(str, Enum):
    INTENDED = "intended"
    NON_CONTROLLABLE = "non-controllable"
    WEIRD = "weird"


@dataclass(frozen=True)
class Capability:
    id: str
    cls: CapabilityClass = CapabilityClass.WEIRD
    description: str = ""
    # Exploitation level the capability represents on its component.
    access: ExploitationState = ExploitationState.NONE
    # Hidden capabilities are contracted away when rendering exploitation graphs.
    hidden: bool = False


@dataclass(frozen=True)
class Interface:
    id: str
    capabilities: tuple[Capability, ...] = ()
    vulnerabilities: frozenset[str] = frozenset()
    properties: Mapping[str, object] = field(default_factory=dict, hash=False, compare=False)


@dataclass(frozen=True)
class Component:
    id: str
    interfaces: tuple[Interface, ...] = ()
    properties: Mapping[str, object] = field(default_factory=dict, hash=False, compare=False)
    # Capabilities of the component that are not bound to one interface (K \ K_I).
    capabilities: tuple[Capability, ...] = ()
    # Holding any of these marks the component as fully exploited.
    root_capabilities: frozenset[str] = frozenset()


@dataclass(frozen=True)
class SecurityInformedArchitecture:
    components: tuple[Component, ...] = ()
    interactions: tuple[tuple[str, str], ...] = ()

    @cached_property
    def interfaces(self) -> dict[str, Interface]:
        return {i.id: i for c in self.components for i in c.interfaces}

    @cached_property
    def component_ids(self) -> frozenset[str]:
        return frozenset(c.id for c in self.components)

    @cached_property
    def component_of_interface(self) -> dict[str, str]:
        return {i.id: c.id for c in self.components for i in c.interfaces}

    @cached_property
    def capabilities(self) -> dict[str, Capability]:
        out = {}
        for c in self.components:
            for cap in c.capabilities:
                out[cap.id] = cap
            for i in c.interfaces:
                for cap in i.capabilities:
                    out[cap.id] = cap
        return out

    @cached_property
    def component_of_capability(self) -> dict[str, str]:
        out = {}
        for c in self.components:
            for cap in c.capabilities:
                out[cap.id] = c.id
            for i in c.interfaces:
                for cap in i.capabilities:
                    out[cap.id] = c.id
        return out

    def component(self, component_id: str) -> Component:
        for c in self.components:
            if c.id == component_id:
                return c
        raise KeyError(component_id)


@dataclass(frozen=True)
class Violation:
    kind: str
    element: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.element}: {self.message}"


def validate_architecture(arch: SecurityInformedArchitecture) -> list[Violation]:
    """Check the disjointness and reference invariants of an architecture.

    Violations are returned as data; nothing is raised.
    """
    violations: list[Violation] = []
    seen_components: set[str] = set()
    iface_owner: dict[str, str] = {}
    cap_owner: dict[str, str] = {}

    for comp in arch.components:
        if comp.id in seen_components:
            violations.append(Violation("duplicate-component", comp.id, "component id is not unique"))
        seen_components.add(comp.id)

        for cap in comp.capabilities:
            if cap.id in cap_owner:
                violations.append(Violation(
                    "duplicate-capability", cap.id,
                    f"declared by both {cap_owner[cap.id]} and component {comp.id}"))
            cap_owner.setdefault(cap.id, f"component {comp.id}")

        for iface in comp.interfaces:
            if iface.id in iface_owner:
                violations.append(Violation(
                    "duplicate-interface", iface.id,
                    f"interface shared by components {iface_owner[iface.id]} and {comp.id}"))
            iface_owner.setdefault(iface.id, comp.id)
            for cap in iface.capabilities:
                if not isinstance(cap.cls, CapabilityClass):
                    violations.append(Violation(
                        "capability-class", cap.id, f"class {cap.cls!r} is not intended/non-controllable/weird"))
                if cap.id in cap_owner:
                    violations.append(Violation(
                        "duplicate-capability", cap.id,
                        f"declared by both {cap_owner[cap.id]} and interface {iface.id}"))
                cap_owner.setdefault(cap.id, f"interface {iface.id}")

        for root in sorted(comp.root_capabilities):
            if root not in arch.capabilities:
                violations.append(Violation("dangling-root", comp.id, f"root capability {root} does not exist"))

    for src, dst in arch.interactions:
        for end in (src, dst):
            if end != ATTACKER and end not in iface_owner:
                violations.append(Violation(
                    "dangling-interaction", f"{src}->{dst}", f"endpoint {end} is not an interface"))
    return violations


@dataclass(frozen=True)
class PentestState:
    capabilities: frozenset[str] = frozenset()
    known_components: frozenset[str] = frozenset()
    known_interfaces: frozenset[str] = frozenset()

    def to_dict(self) -> dict:
        return {
            "K": sorted(self.capabilities),
            "C": sorted(self.known_components),
            "I": sorted(self.known_interfaces),
        }

    def __le__(self, other: "PentestState") -> bool:
        return (self.capabilities <= other.capabilities
                and self.known_components <= other.known_components
                and self.known_interfaces <= other.known_interfaces)


@dataclass(frozen=True)
class AttackStep:
    # Target interface of the interaction; None for steps run through an
    # already-held capability on the target host (local escalation etc.).
    interface: str | None = None
    source: str = ATTACKER
    vulnerabilities: frozenset[str] = frozenset()
    requires: frozenset[str] = frozenset()
    grants: frozenset[str] = frozenset()


class ActionKind(str, Enum):
    SCAN = "scan"
    EXPLOIT = "exploit"
    POST_EXPLOIT = "post-exploit"


@dataclass(frozen=True)
class AttackTactic:
    id: str
    steps: tuple[AttackStep, ...]
    target: str
    factors: AttackFactors = AttackFactors()
    duration: float = 1.0
    kind: ActionKind = ActionKind.EXPLOIT
    exclusion_tags: frozenset[str] = frozenset()
    description: str = ""
    metadata: Mapping[str, object] = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        if not self.steps:
            raise MalformedRepertoireError(f"tactic {self.id} has no steps")

    @property
    def grants(self) -> frozenset[str]:
        """K_A: union of the capabilities granted by every step."""
        out: frozenset[str] = frozenset()
        for step in self.steps:
            out |= step.grants
        return out

    @property
    def interfaces(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(s.interface for s in self.steps if s.interface))

    @property
    def external_requirements(self) -> frozenset[str]:
        """Prerequisites not satisfied by earlier steps of the same tactic."""
        granted: set[str] = set()
        needed: set[str] = set()
        for step in self.steps:
            needed |= step.requires - granted
            granted |= step.grants
        return frozenset(needed)


class ScanKind(str, Enum):
    REMOTE = "remote-probe"
    LOCAL = "local-probe"


@dataclass(frozen=True)
class ScanTemplate:
    id: str
    requires: frozenset[str] = frozenset()
    kind: ScanKind = ScanKind.REMOTE
    factors: ScanFactors = ScanFactors()
    duration: float = 1.0
    # Host a local probe is installed on.
    component: str | None = None
    exclusion_tags: frozenset[str] = frozenset()
    description: str = ""

    def __post_init__(self):
        if self.kind is ScanKind.LOCAL and not self.requires:
            raise MalformedRepertoireError(f"local probe {self.id} must require a foothold capability")
        if self.kind is ScanKind.LOCAL and not self.component:
            raise MalformedRepertoireError(f"local probe {self.id} must name the component it runs on")


def apply_attack_result(state: PentestState, tactic: AttackTactic, succeeded_steps: int,
                        universe: Iterable[str] | None = None) -> PentestState:
    """K = K ∪ K+ for every step of the succeeded prefix."""
    if not 0 <= succeeded_steps <= len(tactic.steps):
        raise ValueError(f"succeeded_steps={succeeded_steps} outside 0..{len(tactic.steps)}")
    gained: set[str] = set()
    for step in tactic.steps[:succeeded_steps]:
        gained |= step.grants
    if universe is not None:
        unknown = gained - set(universe)
        if unknown:
            raise MalformedRepertoireError(f"tactic {tactic.id} grants unknown capabilities {sorted(unknown)}")
    if gained <= state.capabilities:
        return state
    return replace(state, capabilities=state.capabilities | gained)


def apply_scan_result(state: PentestState, found_components: Iterable[str] = (),
                      found_interfaces: Iterable[str] = (), found_capabilities: Iterable[str] = (),
                      arch: SecurityInformedArchitecture | None = None) -> PentestState:
    """C = C ∪ C+, I = I ∪ I+ (and K ∪ K+ for scans that expose exploitable conditions)."""
    comps, ifaces, caps = frozenset(found_components), frozenset(found_interfaces), frozenset(found_capabilities)
    if arch is not None:
        bad = (comps - arch.component_ids) | (ifaces - arch.interfaces.keys()) | (caps - arch.capabilities.keys())
        if bad:
            raise SimulatorContractError(f"scan result references unknown ids {sorted(bad)}")
    if comps <= state.known_components and ifaces <= state.known_interfaces and caps <= state.capabilities:
        return state
    return PentestState(
        capabilities=state.capabilities | caps,
        known_components=state.known_components | comps,
        known_interfaces=state.known_interfaces | ifaces,
    )


def is_viable(tactic: AttackTactic, state: PentestState) -> bool:
    """Whether every step's prerequisites can hold when the tactic runs now.

    Later steps may rely on capabilities granted by earlier ones.
    """
    if tactic.target not in state.known_components:
        return False
    held = set(state.capabilities)
    for step in tactic.steps:
        if step.interface is not None and step.interface not in state.known_interfaces:
            return False
        if not step.requires <= held:
            return False
        held |= step.grants
    return True


class OutcomeOracle(Protocol):
    def attack_gain(self, state: PentestState, tactic: AttackTactic) -> frozenset[str]:
        """Capabilities the tactic would add if launched from ``state``."""

    def scan_gain(self, state: PentestState, scan: ScanTemplate) -> tuple[frozenset, frozenset, frozenset]:
        """(C+, I+, K+) the scan would report if launched from ``state``."""


def goal_reached(state: PentestState, attacks: Iterable[AttackTactic], scans: Iterable[ScanTemplate],
                 oracle: OutcomeOracle) -> bool:
    """True when no attack would enlarge K and no scan would enlarge C or I."""
    for tactic in attacks:
        if not oracle.attack_gain(state, tactic) <= state.capabilities:
            return False
    for scan in scans:
        comps, ifaces, caps = oracle.scan_gain(state, scan)
        if not (comps <= state.known_components and ifaces <= state.known_interfaces
                and caps <= state.capabilities):
            return False
    return True
