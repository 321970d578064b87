"""Import MDP-style pentest descriptions (machines plus probabilistic actions).

Each machine becomes a component with its identifier, OS and exploitation
state as properties; each service becomes an interface with its port as a
property. Exploit actions become one-step attacks whose success probability
becomes a stochastic attack rule. Rewards are kept as tactic metadata and do
not influence ranking.
"""
from __future__ import annotations

from typing import Any, Mapping

from ..errors import ImportFormatError
from ..factors import AttackFactors, ExploitationState, ScanFactors
from ..model import (
    AttackStep,
    AttackTactic,
    Capability,
    Component,
    Interface,
    ScanKind,
    ScanTemplate,
    SecurityInformedArchitecture,
    validate_architecture,
)
from .scenario import AttackRule, Repertoire, Scenario, ScanRule, StepOutcome, read_document

_MACHINE_KEYS = {"id", "os", "services", "exploitation_state"}
_ACTION_KEYS = {"id", "type", "machine", "service", "probability", "reward", "requires", "grants",
                "access", "duration", "factors"}


def _bad(message: str, path: str, source: str) -> ImportFormatError:
    return ImportFormatError(message, path=path, source=source)


def _str_list(value: Any, path: str, source: str) -> list[str]:
    if value is None:
        return []
    if not isinstance(value, list) or not all(isinstance(v, (str, int)) and not isinstance(v, bool) for v in value):
        raise _bad("expected a list of identifiers", path, source)
    return [str(v) for v in value]


def _services(value: Any, path: str, source: str) -> list[tuple[str, object]]:
    """Accept either {name: port} or [{name, port}] forms."""
    if isinstance(value, Mapping):
        return [(str(k), v) for k, v in value.items()]
    if not isinstance(value, list) or not value:
        raise _bad("machine needs a non-empty services list", path, source)
    out = []
    for k, item in enumerate(value):
        if not isinstance(item, Mapping) or "name" not in item:
            raise _bad("service must be a mapping with name and port", f"{path}[{k}]", source)
        out.append((str(item["name"]), item.get("port")))
    return out


def import_mdp_scenario(document: Any, source: str = "") -> Scenario:
    if isinstance(document, str):
        source = source or document
        document = read_document(document)
    if not isinstance(document, Mapping):
        raise _bad("document must be a mapping", "", source)
    if document.get("kind", "mdp") != "mdp":
        raise _bad(f"expected kind 'mdp', got {document.get('kind')!r}", "kind", source)
    machines = document.get("machines")
    if not isinstance(machines, list) or not machines:
        raise _bad("machines must be a non-empty list", "machines", source)

    interfaces_of: dict[str, list[Interface]] = {}
    properties_of: dict[str, dict] = {}
    iface_id: dict[tuple[str, str], str] = {}
    for k, machine in enumerate(machines):
        path = f"machines[{k}]"
        if not isinstance(machine, Mapping):
            raise _bad("machine record must be a mapping", path, source)
        unknown = set(machine) - _MACHINE_KEYS
        if unknown:
            raise _bad(f"unknown field(s) {sorted(unknown)}", path, source)
        if "id" not in machine:
            raise _bad("machine record needs an id", f"{path}.id", source)
        mid = str(machine["id"])
        if mid in interfaces_of:
            raise _bad(f"duplicate machine {mid!r}", f"{path}.id", source)
        try:
            state = ExploitationState.parse(machine.get("exploitation_state", "None"))
        except Exception as exc:
            raise _bad(str(exc), f"{path}.exploitation_state", source) from None
        properties_of[mid] = {"identifier": mid, "os": machine.get("os", "unknown"),
                              "exploitation_state": state.value}
        ifaces = []
        for name, port in _services(machine.get("services"), f"{path}.services", source):
            if isinstance(port, bool) or not isinstance(port, int) or not 0 < port < 65536:
                raise _bad(f"service {name!r} needs a port in 1..65535, got {port!r}", f"{path}.services", source)
            iid = f"{mid}:{name}"
            iface_id[(mid, name)] = iid
            ifaces.append(Interface(id=iid, properties={"service": name, "port": port}))
        interfaces_of[mid] = ifaces

    actions = document.get("actions") or []
    if not isinstance(actions, list):
        raise _bad("actions must be a list", "actions", source)
    caps_of: dict[str, dict[str, Capability]] = {m: {} for m in interfaces_of}
    attacks: list[AttackTactic] = []
    scans: list[ScanTemplate] = []
    attack_rules: dict[str, AttackRule] = {}
    scan_rules: dict[str, ScanRule] = {}
    durations: dict[str, float] = {}
    roots: dict[str, set[str]] = {m: set() for m in interfaces_of}
    seen: set[str] = set()

    for k, action in enumerate(actions):
        path = f"actions[{k}]"
        if not isinstance(action, Mapping):
            raise _bad("action record must be a mapping", path, source)
        unknown = set(action) - _ACTION_KEYS
        if unknown:
            raise _bad(f"unknown field(s) {sorted(unknown)}", path, source)
        aid = str(action.get("id", ""))
        if not aid or aid in seen:
            raise _bad(f"action needs a unique id, got {aid!r}", f"{path}.id", source)
        seen.add(aid)
        machine = action.get("machine")
        if machine is not None and str(machine) not in interfaces_of:
            raise _bad(f"unknown machine {machine!r}", f"{path}.machine", source)
        machine = None if machine is None else str(machine)
        requires = _str_list(action.get("requires"), f"{path}.requires", source)
        grants = _str_list(action.get("grants"), f"{path}.grants", source)
        if "duration" in action:
            duration = action["duration"]
            if isinstance(duration, bool) or not isinstance(duration, (int, float)) or duration < 0:
                raise _bad(f"duration must be a non-negative number, got {duration!r}", f"{path}.duration", source)
            durations[aid] = float(duration)
        kind = action.get("type")

        if kind == "scan":
            targets = [machine] if machine else sorted(interfaces_of)
            reveals = tuple(i.id for m in targets for i in interfaces_of[m])
            local = bool(requires)
            if local and machine is None:
                raise _bad("a scan with prerequisites must name its machine", f"{path}.machine", source)
            scans.append(ScanTemplate(
                id=aid, requires=frozenset(requires), kind=ScanKind.LOCAL if local else ScanKind.REMOTE,
                component=machine if local else None,
                factors=ScanFactors.from_mapping(action.get("factors")),
            ))
            scan_rules[aid] = ScanRule(reveals=reveals, grants=frozenset())
            continue
        if kind != "exploit":
            raise _bad(f"type must be scan or exploit, got {kind!r}", f"{path}.type", source)
        if machine is None:
            raise _bad("an exploit needs a machine", f"{path}.machine", source)
        service = action.get("service")
        interface = None
        if service is not None:
            interface = iface_id.get((machine, str(service)))
            if interface is None:
                raise _bad(f"machine {machine!r} has no service {service!r}", f"{path}.service", source)
        probability = action.get("probability", 1.0)
        if isinstance(probability, bool) or not isinstance(probability, (int, float)) or not 0 <= probability <= 1:
            raise _bad(f"probability must be in [0, 1], got {probability!r}", f"{path}.probability", source)
        try:
            access = ExploitationState.parse(action.get("access", "Initial"))
        except Exception as exc:
            raise _bad(str(exc), f"{path}.access", source) from None
        for cap in grants:
            caps_of[machine].setdefault(cap, Capability(id=cap, access=access))
            if access in (ExploitationState.ELEVATED, ExploitationState.C2C):
                roots[machine].add(cap)
        metadata = {"probability": float(probability)}
        if "reward" in action:
            metadata["reward"] = action["reward"]
        attacks.append(AttackTactic(
            id=aid, target=machine,
            steps=(AttackStep(interface=interface, requires=frozenset(requires), grants=frozenset(grants)),),
            factors=AttackFactors.from_mapping(action.get("factors")),
            metadata=metadata,
        ))
        attack_rules[aid] = AttackRule(steps=(StepOutcome(float(probability)),), interface=interface)

    declared = {c for caps in caps_of.values() for c in caps}
    for tactic in attacks:
        for cap in sorted(tactic.external_requirements - declared):
            raise _bad(f"{tactic.id} requires {cap!r}, which no action grants", "actions", source)
    for scan in scans:
        for cap in sorted(scan.requires - declared):
            raise _bad(f"{scan.id} requires {cap!r}, which no action grants", "actions", source)

    components = tuple(
        Component(id=m, interfaces=tuple(interfaces_of[m]), properties=properties_of[m],
                  capabilities=tuple(caps_of[m][c] for c in sorted(caps_of[m])),
                  root_capabilities=frozenset(roots[m]))
        for m in interfaces_of
    )
    arch = SecurityInformedArchitecture(components=components)
    problems = validate_architecture(arch)
    if problems:
        raise _bad(str(problems[0]), "machines", source)
    return Scenario(
        architecture=arch, attack_rules=attack_rules, scan_rules=scan_rules, durations=durations,
        name=str(document.get("name", "mdp-import")),
        repertoire=Repertoire(attacks=tuple(attacks), scans=tuple(scans), name="mdp-import"),
    )
