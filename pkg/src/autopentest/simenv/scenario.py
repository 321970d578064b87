"""Scenario and repertoire documents: parsing, validation and bundled examples.

Documents are YAML mappings with a ``version`` and a ``kind`` field.
Every parse error is reported as a LoadError carrying the dotted path of the
offending field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..errors import ConfigurationError, LoadError
from ..factors import AttackFactors, ExploitationState, ScanFactors
from ..model import (
    ATTACKER,
    ActionKind,
    AttackStep,
    AttackTactic,
    Capability,
    CapabilityClass,
    Component,
    Interface,
    ScanKind,
    ScanTemplate,
    SecurityInformedArchitecture,
    Violation,
    validate_architecture,
)

SCHEMA_VERSION = 1
BUNDLED = ("webapp", "metasploitable2", "metasploitable3", "labnet")


@dataclass(frozen=True)
class Visibility:
    # Interfaces on a segment are visible to scans once the segment is reachable;
    # local-only interfaces need a local probe on their own host.
    segment: str | None = "default"
    local_only: bool = False


@dataclass(frozen=True)
class StepOutcome:
    # success probability; 1.0 and 0.0 are the deterministic cases
    probability: float

    @property
    def deterministic(self) -> bool:
        return self.probability in (0.0, 1.0)


@dataclass(frozen=True)
class AttackRule:
    steps: tuple[StepOutcome, ...]
    interface: str | None = None

    def outcome_for(self, index: int) -> StepOutcome:
        # a single outcome applies to every step
        if len(self.steps) == 1:
            return self.steps[0]
        return self.steps[index] if index < len(self.steps) else StepOutcome(0.0)


@dataclass(frozen=True)
class ScanRule:
    reveals: tuple[str, ...] = ()
    grants: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Repertoire:
    attacks: tuple[AttackTactic, ...] = ()
    scans: tuple[ScanTemplate, ...] = ()
    name: str = ""

    def action_ids(self) -> list[str]:
        return [a.id for a in self.attacks] + [s.id for s in self.scans]


@dataclass(frozen=True)
class Scenario:
    architecture: SecurityInformedArchitecture
    visibility: Mapping[str, Visibility] = field(default_factory=dict)
    reachability: Mapping[str, tuple[frozenset[str], ...]] = field(default_factory=dict)
    attack_rules: Mapping[str, AttackRule] = field(default_factory=dict)
    scan_rules: Mapping[str, ScanRule] = field(default_factory=dict)
    flags: frozenset[str] = frozenset()
    durations: Mapping[str, float] = field(default_factory=dict)
    name: str = ""
    # Set when the document carries its own action set (MDP imports).
    repertoire: Repertoire | None = None

    def visibility_of(self, interface: str) -> Visibility:
        return self.visibility.get(interface, Visibility())

    def duration_of(self, action: AttackTactic | ScanTemplate) -> float:
        return self.durations.get(action.id, action.duration)

    @property
    def stochastic(self) -> bool:
        return any(not o.deterministic for r in self.attack_rules.values() for o in r.steps)


# ---------------------------------------------------------------- parsing helpers

def _fail(message: str, path: str, source: str) -> LoadError:
    return LoadError(message, path=path, source=source)


def _mapping(value: Any, path: str, source: str) -> Mapping:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise _fail(f"expected a mapping, got {type(value).__name__}", path, source)
    return value


def _list(value: Any, path: str, source: str) -> list:
    if value is None:
        return []
    if not isinstance(value, list):
        raise _fail(f"expected a list, got {type(value).__name__}", path, source)
    return value


def _ident(value: Any, path: str, source: str) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int)) or str(value) == "":
        raise _fail(f"expected a non-empty identifier, got {value!r}", path, source)
    return str(value)


def _ids(value: Any, path: str, source: str) -> list[str]:
    return [_ident(v, f"{path}[{i}]", source) for i, v in enumerate(_list(value, path, source))]


def _number(value: Any, path: str, source: str, minimum: float = 0.0) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise _fail(f"expected a number, got {value!r}", path, source)
    if value < minimum:
        raise _fail(f"must be >= {minimum}, got {value}", path, source)
    return float(value)


def _check_keys(data: Mapping, allowed: set[str], path: str, source: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise _fail(f"unknown field(s) {sorted(map(str, unknown))}", path, source)


def _header(doc: Any, kind: str, source: str) -> Mapping:
    doc = _mapping(doc, "", source)
    version = doc.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise _fail(f"unsupported schema version {version!r} (expected {SCHEMA_VERSION})", "version", source)
    if doc.get("kind", kind) != kind:
        raise _fail(f"expected kind {kind!r}, got {doc.get('kind')!r}", "kind", source)
    return doc


def _with_path(fn, path: str, source: str):
    try:
        return fn()
    except ConfigurationError as exc:
        raise _fail(str(exc), path, source) from None


def read_document(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise LoadError(f"cannot read file ({exc.strerror or exc})", source=str(path)) from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise LoadError(f"invalid YAML: {exc}", source=str(path)) from None


# ---------------------------------------------------------------- architecture

def _parse_capability(data: Any, path: str, source: str) -> Capability:
    if isinstance(data, (str, int)) and not isinstance(data, bool):
        return Capability(id=str(data))
    data = _mapping(data, path, source)
    _check_keys(data, {"id", "class", "description", "access", "hidden"}, path, source)
    cls_name = data.get("class", "weird")
    try:
        cls = CapabilityClass(cls_name)
    except ValueError:
        raise _fail(f"class must be intended, non-controllable or weird, got {cls_name!r}",
                    f"{path}.class", source) from None
    access = _with_path(lambda: ExploitationState.parse(data.get("access", "None")), f"{path}.access", source)
    return Capability(
        id=_ident(data.get("id"), f"{path}.id", source),
        cls=cls,
        description=str(data.get("description", "")),
        access=access,
        hidden=bool(data.get("hidden", False)),
    )


def _parse_architecture(data: Any, source: str) -> SecurityInformedArchitecture:
    data = _mapping(data, "architecture", source)
    _check_keys(data, {"components", "interactions"}, "architecture", source)
    components = []
    for ci, comp in enumerate(_list(data.get("components"), "architecture.components", source)):
        cpath = f"architecture.components[{ci}]"
        comp = _mapping(comp, cpath, source)
        _check_keys(comp, {"id", "interfaces", "properties", "capabilities", "root"}, cpath, source)
        interfaces = []
        for ii, iface in enumerate(_list(comp.get("interfaces"), f"{cpath}.interfaces", source)):
            ipath = f"{cpath}.interfaces[{ii}]"
            iface = _mapping(iface, ipath, source)
            _check_keys(iface, {"id", "capabilities", "vulnerabilities", "properties"}, ipath, source)
            interfaces.append(Interface(
                id=_ident(iface.get("id"), f"{ipath}.id", source),
                capabilities=tuple(_parse_capability(c, f"{ipath}.capabilities[{k}]", source)
                                   for k, c in enumerate(_list(iface.get("capabilities"),
                                                               f"{ipath}.capabilities", source))),
                vulnerabilities=frozenset(_ids(iface.get("vulnerabilities"), f"{ipath}.vulnerabilities", source)),
                properties=dict(_mapping(iface.get("properties"), f"{ipath}.properties", source)),
            ))
        components.append(Component(
            id=_ident(comp.get("id"), f"{cpath}.id", source),
            interfaces=tuple(interfaces),
            properties=dict(_mapping(comp.get("properties"), f"{cpath}.properties", source)),
            capabilities=tuple(_parse_capability(c, f"{cpath}.capabilities[{k}]", source)
                               for k, c in enumerate(_list(comp.get("capabilities"),
                                                           f"{cpath}.capabilities", source))),
            root_capabilities=frozenset(_ids(comp.get("root"), f"{cpath}.root", source)),
        ))
    interactions = []
    for ri, pair in enumerate(_list(data.get("interactions"), "architecture.interactions", source)):
        rpath = f"architecture.interactions[{ri}]"
        if isinstance(pair, Mapping):
            pair = [pair.get("source"), pair.get("target")]
        if not isinstance(pair, list) or len(pair) != 2:
            raise _fail("interaction must be [source, target]", rpath, source)
        interactions.append((_ident(pair[0], f"{rpath}[0]", source), _ident(pair[1], f"{rpath}[1]", source)))
    arch = SecurityInformedArchitecture(components=tuple(components), interactions=tuple(interactions))
    problems = validate_architecture(arch)
    if problems:
        raise _fail(str(problems[0]), "architecture", source)
    return arch


# ---------------------------------------------------------------- scenario

def _parse_outcome(value: Any, path: str, source: str) -> StepOutcome:
    if value in ("success", True):
        return StepOutcome(1.0)
    if value in ("failure", False):
        return StepOutcome(0.0)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if not 0.0 <= value <= 1.0:
            raise _fail(f"probability must be in [0, 1], got {value}", path, source)
        return StepOutcome(float(value))
    raise _fail(f"outcome must be success, failure or a probability, got {value!r}", path, source)


def _parse_attack_rule(data: Any, path: str, source: str) -> AttackRule:
    if not isinstance(data, Mapping):
        return AttackRule(steps=(_parse_outcome(data, path, source),))
    _check_keys(data, {"outcome", "steps", "interface"}, path, source)
    if "steps" in data and "outcome" in data:
        raise _fail("give either outcome or steps, not both", path, source)
    if "steps" in data:
        steps = tuple(_parse_outcome(v, f"{path}.steps[{i}]", source)
                      for i, v in enumerate(_list(data["steps"], f"{path}.steps", source)))
        if not steps:
            raise _fail("steps must not be empty", f"{path}.steps", source)
    else:
        steps = (_parse_outcome(data.get("outcome", "success"), f"{path}.outcome", source),)
    interface = data.get("interface")
    return AttackRule(steps=steps, interface=None if interface is None else _ident(interface, f"{path}.interface", source))


def load_scenario(document: Any, source: str = "") -> Scenario:
    """Parse and validate a scenario document (a mapping, or a path to a YAML file)."""
    if isinstance(document, (str, Path)):
        source = source or str(document)
        document = read_document(document)
    if isinstance(document, Mapping) and document.get("kind") == "mdp":
        from .mdp import import_mdp_scenario
        return import_mdp_scenario(document, source=source)
    doc = _header(document, "scenario", source)
    _check_keys(doc, {"version", "kind", "name", "description", "architecture", "visibility", "reachability",
                      "attack_rules", "scan_rules", "flags", "durations"}, "", source)
    arch = _parse_architecture(doc.get("architecture"), source)
    ifaces = arch.interfaces
    caps = arch.capabilities

    visibility: dict[str, Visibility] = {}
    for iface, rule in _mapping(doc.get("visibility"), "visibility", source).items():
        path = f"visibility.{iface}"
        iface = str(iface)
        if iface not in ifaces:
            raise _fail(f"unknown interface {iface!r}", path, source)
        if rule == "local":
            visibility[iface] = Visibility(segment=None, local_only=True)
        else:
            rule = _mapping(rule, path, source)
            _check_keys(rule, {"segment"}, path, source)
            visibility[iface] = Visibility(segment=_ident(rule.get("segment"), f"{path}.segment", source))

    reachability: dict[str, tuple[frozenset[str], ...]] = {}
    for segment, options in _mapping(doc.get("reachability"), "reachability", source).items():
        path = f"reachability.{segment}"
        sets = []
        for k, option in enumerate(_list(options, path, source)):
            ids = _ids(option, f"{path}[{k}]", source)
            for cap in ids:
                if cap not in caps:
                    raise _fail(f"unknown capability {cap!r}", f"{path}[{k}]", source)
            sets.append(frozenset(ids))
        reachability[str(segment)] = tuple(sets)
    for iface, rule in visibility.items():
        if rule.segment is not None and rule.segment != "default" and rule.segment not in reachability:
            raise _fail(f"segment {rule.segment!r} has no reachability entry", f"visibility.{iface}.segment", source)
    if not any(not visibility.get(i, Visibility()).local_only for i in ifaces):
        raise _fail("no remotely visible interface; nothing is discoverable", "visibility", source)

    attack_rules = {}
    for tactic, rule in _mapping(doc.get("attack_rules"), "attack_rules", source).items():
        path = f"attack_rules.{tactic}"
        parsed = _parse_attack_rule(rule, path, source)
        if parsed.interface is not None and parsed.interface not in ifaces:
            raise _fail(f"unknown interface {parsed.interface!r}", f"{path}.interface", source)
        attack_rules[str(tactic)] = parsed

    scan_rules = {}
    for scan, rule in _mapping(doc.get("scan_rules"), "scan_rules", source).items():
        path = f"scan_rules.{scan}"
        rule = _mapping(rule, path, source)
        _check_keys(rule, {"reveals", "grants"}, path, source)
        reveals = rule.get("reveals")
        revealed = sorted(ifaces) if reveals == "all" else _ids(reveals, f"{path}.reveals", source)
        for iface in revealed:
            if iface not in ifaces:
                raise _fail(f"unknown interface {iface!r}", f"{path}.reveals", source)
        grants = _ids(rule.get("grants"), f"{path}.grants", source)
        for cap in grants:
            if cap not in caps:
                raise _fail(f"unknown capability {cap!r}", f"{path}.grants", source)
        scan_rules[str(scan)] = ScanRule(reveals=tuple(revealed), grants=frozenset(grants))

    flags = _ids(doc.get("flags"), "flags", source)
    for k, flag in enumerate(flags):
        if flag not in caps:
            raise _fail(f"unknown capability {flag!r}", f"flags[{k}]", source)

    durations = {str(k): _number(v, f"durations.{k}", source)
                 for k, v in _mapping(doc.get("durations"), "durations", source).items()}

    return Scenario(
        architecture=arch, visibility=visibility, reachability=reachability,
        attack_rules=attack_rules, scan_rules=scan_rules, flags=frozenset(flags),
        durations=durations, name=str(doc.get("name", "")),
    )


# ---------------------------------------------------------------- repertoire

def _parse_step(data: Any, path: str, source: str) -> AttackStep:
    data = _mapping(data, path, source)
    _check_keys(data, {"interface", "source", "vulnerabilities", "requires", "grants"}, path, source)
    iface = data.get("interface")
    return AttackStep(
        interface=None if iface is None else _ident(iface, f"{path}.interface", source),
        source=_ident(data.get("source", ATTACKER), f"{path}.source", source),
        vulnerabilities=frozenset(_ids(data.get("vulnerabilities"), f"{path}.vulnerabilities", source)),
        requires=frozenset(_ids(data.get("requires"), f"{path}.requires", source)),
        grants=frozenset(_ids(data.get("grants"), f"{path}.grants", source)),
    )


def load_repertoire(document: Any, source: str = "") -> Repertoire:
    if isinstance(document, (str, Path)):
        source = source or str(document)
        document = read_document(document)
    doc = _header(document, "repertoire", source)
    _check_keys(doc, {"version", "kind", "name", "description", "tactics", "scans"}, "", source)
    seen: set[str] = set()

    def unique(action_id: str, path: str) -> str:
        if action_id in seen:
            raise _fail(f"duplicate action id {action_id!r}", path, source)
        seen.add(action_id)
        return action_id

    attacks = []
    for k, item in enumerate(_list(doc.get("tactics"), "tactics", source)):
        path = f"tactics[{k}]"
        item = _mapping(item, path, source)
        _check_keys(item, {"id", "kind", "target", "description", "factors", "duration", "exclusion_tags",
                           "steps", "metadata"}, path, source)
        steps = tuple(_parse_step(s, f"{path}.steps[{i}]", source)
                      for i, s in enumerate(_list(item.get("steps"), f"{path}.steps", source)))
        if not steps:
            raise _fail("a tactic needs at least one step", f"{path}.steps", source)
        kind_name = item.get("kind", "exploit")
        if kind_name not in (ActionKind.EXPLOIT.value, ActionKind.POST_EXPLOIT.value):
            raise _fail(f"kind must be exploit or post-exploit, got {kind_name!r}", f"{path}.kind", source)
        attacks.append(AttackTactic(
            id=unique(_ident(item.get("id"), f"{path}.id", source), f"{path}.id"),
            steps=steps,
            target=_ident(item.get("target"), f"{path}.target", source),
            factors=_with_path(lambda: AttackFactors.from_mapping(item.get("factors")), f"{path}.factors", source),
            duration=_number(item.get("duration", 1.0), f"{path}.duration", source),
            kind=ActionKind(kind_name),
            exclusion_tags=frozenset(_ids(item.get("exclusion_tags"), f"{path}.exclusion_tags", source)),
            description=str(item.get("description", "")),
            metadata=dict(_mapping(item.get("metadata"), f"{path}.metadata", source)),
        ))

    scans = []
    for k, item in enumerate(_list(doc.get("scans"), "scans", source)):
        path = f"scans[{k}]"
        item = _mapping(item, path, source)
        _check_keys(item, {"id", "kind", "requires", "component", "description", "factors", "duration",
                           "exclusion_tags"}, path, source)
        kind_name = item.get("kind", ScanKind.REMOTE.value)
        try:
            kind = ScanKind(kind_name)
        except ValueError:
            raise _fail(f"kind must be remote-probe or local-probe, got {kind_name!r}", f"{path}.kind", source) from None
        requires = frozenset(_ids(item.get("requires"), f"{path}.requires", source))
        component = item.get("component")
        if kind is ScanKind.LOCAL and not requires:
            raise _fail("a local probe must require a foothold capability", f"{path}.requires", source)
        if kind is ScanKind.LOCAL and component is None:
            raise _fail("a local probe must name its component", f"{path}.component", source)
        scans.append(ScanTemplate(
            id=unique(_ident(item.get("id"), f"{path}.id", source), f"{path}.id"),
            requires=requires,
            kind=kind,
            factors=_with_path(lambda: ScanFactors.from_mapping(item.get("factors")), f"{path}.factors", source),
            duration=_number(item.get("duration", 1.0), f"{path}.duration", source),
            component=None if component is None else _ident(component, f"{path}.component", source),
            exclusion_tags=frozenset(_ids(item.get("exclusion_tags"), f"{path}.exclusion_tags", source)),
            description=str(item.get("description", "")),
        ))
    return Repertoire(attacks=tuple(attacks), scans=tuple(scans), name=str(doc.get("name", "")))


def check_repertoire(scenario: Scenario, repertoire: Repertoire, unused_rules: bool = True) -> list[Violation]:
    """Cross-reference a repertoire against a scenario's ground truth.

    Rules naming actions the repertoire lacks are harmless when running a
    reduced repertoire; pass ``unused_rules=False`` to skip reporting them.
    """
    arch = scenario.architecture
    caps = arch.capabilities
    problems: list[Violation] = []
    for tactic in repertoire.attacks:
        if tactic.target not in arch.component_ids:
            problems.append(Violation("unknown-component", tactic.id, f"target {tactic.target!r} does not exist"))
        for k, step in enumerate(tactic.steps):
            where = f"{tactic.id}.steps[{k}]"
            if step.interface is not None and step.interface not in arch.interfaces:
                problems.append(Violation("unknown-interface", where, f"interface {step.interface!r} does not exist"))
            if step.source != ATTACKER and step.source not in arch.interfaces:
                problems.append(Violation("unknown-interface", where, f"source {step.source!r} does not exist"))
            for cap in sorted((step.requires | step.grants) - caps.keys()):
                problems.append(Violation("unknown-capability", where, f"capability {cap!r} does not exist"))
        rule = scenario.attack_rules.get(tactic.id)
        if rule is not None:
            if rule.interface is not None and rule.interface not in tactic.interfaces:
                problems.append(Violation("rule-mismatch", tactic.id,
                                          f"rule interface {rule.interface!r} is not attacked by the tactic"))
            if len(rule.steps) > 1 and len(rule.steps) != len(tactic.steps):
                problems.append(Violation("rule-mismatch", tactic.id,
                                          f"rule lists {len(rule.steps)} steps, tactic has {len(tactic.steps)}"))
    for scan in repertoire.scans:
        for cap in sorted(scan.requires - caps.keys()):
            problems.append(Violation("unknown-capability", scan.id, f"capability {cap!r} does not exist"))
        if scan.component is not None and scan.component not in arch.component_ids:
            problems.append(Violation("unknown-component", scan.id, f"component {scan.component!r} does not exist"))
    if not unused_rules:
        return problems
    ids = set(repertoire.action_ids())
    for rule_id in sorted(set(scenario.attack_rules) - {a.id for a in repertoire.attacks}):
        if rule_id not in ids:
            problems.append(Violation("unused-rule", rule_id, "attack rule names no tactic of the repertoire"))
    for rule_id in sorted(set(scenario.scan_rules) - {s.id for s in repertoire.scans}):
        problems.append(Violation("unused-rule", rule_id, "scan rule names no scan of the repertoire"))
    return problems


def bundled_path(name: str, kind: str = "scenario") -> Path:
    if name not in BUNDLED:
        raise LoadError(f"no bundled scenario named {name!r} (choose from {', '.join(BUNDLED)})")
    return Path(str(resources.files("autopentest") / "data" / f"{name}.{kind}.yaml"))


def load_bundled(name: str) -> tuple[Scenario, Repertoire]:
    scenario = load_scenario(bundled_path(name, "scenario"))
    repertoire = load_repertoire(bundled_path(name, "repertoire"))
    return scenario, repertoire
