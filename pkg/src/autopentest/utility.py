"""Factor value functions, weighted utility and strategy-memory ranking."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import yaml

from .errors import ConfigurationError
from .factors import (
    AttackFactors,
    AttackVector,
    Complexity,
    ExploitationState,
    Privileges,
    RunningTime,
    ScanFactors,
    ScanRange,
    ScanTargets,
    TargetFactors,
    UserInteraction,
)
from .knowledge import KnowledgeBase, available_attacks, available_scans, available_targets

__all__ = [
    "AttackFactors", "ScanFactors", "TargetFactors", "CountValue", "ValueTables", "WeightConfig",
    "StrategyMemory", "DEFAULT_VALUES", "DEFAULT_WEIGHTS", "target_value", "attack_value",
    "scan_value", "utility", "target_utility", "attack_utility", "scan_utility",
    "target_factors", "memory_update", "load_weight_config", "rank",
]

WEIGHT_TOLERANCE = 1e-9

TARGET_FACTORS = ("services", "vulnerabilities", "connections", "exploitation_state")
ATTACK_FACTORS = ("vector", "complexity", "privileges", "interaction", "running_time")
SCAN_FACTORS = ("range", "targets", "duration", "complexity")

_ATTACK_LEVELS = {
    "vector": AttackVector,
    "complexity": Complexity,
    "privileges": Privileges,
    "interaction": UserInteraction,
    "running_time": RunningTime,
}
_SCAN_LEVELS = {
    "range": ScanRange,
    "targets": ScanTargets,
    "duration": RunningTime,
    "complexity": Complexity,
}


@dataclass(frozen=True)
class CountValue:
    """min(n ** exponent, cap) / cap"""

    exponent: float = 1
    cap: float = 10

    def __post_init__(self):
        if self.cap <= 0 or self.exponent <= 0:
            raise ConfigurationError(f"count value needs positive exponent and cap, got {self}")

    def __call__(self, count: int) -> float:
        return min(count ** self.exponent, self.cap) / self.cap


def _freeze(table: Mapping) -> Mapping:
    return MappingProxyType(dict(table))


@dataclass(frozen=True)
class ValueTables:
    counts: Mapping[str, CountValue]
    exploitation_state: Mapping[ExploitationState, float]
    attack: Mapping[str, Mapping[Enum, float]]
    scan: Mapping[str, Mapping[Enum, float]]

    def __post_init__(self):
        missing = {"services", "vulnerabilities", "connections"} - set(self.counts)
        if missing:
            raise ConfigurationError(f"count value functions missing for {sorted(missing)}")
        self._check_cases("exploitation_state", self.exploitation_state, ExploitationState)
        for name, enum in _ATTACK_LEVELS.items():
            self._check_cases(f"attack.{name}", self.attack.get(name, {}), enum)
        for name, enum in _SCAN_LEVELS.items():
            self._check_cases(f"scan.{name}", self.scan.get(name, {}), enum)

    @staticmethod
    def _check_cases(label: str, table: Mapping, enum: type[Enum]) -> None:
        missing = [m.value for m in enum if m not in table]
        if missing:
            raise ConfigurationError(f"value table {label} has no case for {missing}")
        for level, value in table.items():
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"value table {label}[{level.value}] = {value} outside [0, 1]")


DEFAULT_VALUES = ValueTables(
    counts=_freeze({
        "services": CountValue(exponent=1, cap=10),
        "vulnerabilities": CountValue(exponent=2, cap=10),
        "connections": CountValue(exponent=1.5, cap=10),
    }),
    exploitation_state=_freeze({
        ExploitationState.NONE: 0.73,
        ExploitationState.INITIAL: 0.9,
        ExploitationState.ELEVATED: 1.0,
        ExploitationState.C2C: 0.23,
    }),
    attack=_freeze({
        "vector": _freeze({AttackVector.NETWORK: 1.0, AttackVector.ADJACENT: 0.73,
                           AttackVector.LOCAL: 0.64, AttackVector.PHYSICAL: 0.23}),
        "complexity": _freeze({Complexity.LOW: 1.0, Complexity.HIGH: 0.57}),
        "privileges": _freeze({Privileges.NONE: 1.0, Privileges.LOW: 0.73, Privileges.HIGH: 0.32}),
        "interaction": _freeze({UserInteraction.NONE: 1.0, UserInteraction.REQUIRED: 0.73}),
        "running_time": _freeze({RunningTime.QUICK: 1.0, RunningTime.MEDIUM: 0.73,
                                 RunningTime.LONG: 0.31, RunningTime.GUESSING: 0.12}),
    }),
    scan=_freeze({
        "range": _freeze({ScanRange.NETWORK: 1.0, ScanRange.HOST: 0.73, ScanRange.LOCAL: 0.32}),
        "targets": _freeze({ScanTargets.NETWORK: 1.0, ScanTargets.MULTIPLE: 0.73, ScanTargets.ONE: 0.32}),
        "duration": _freeze({RunningTime.QUICK: 1.0, RunningTime.MEDIUM: 0.73,
                             RunningTime.LONG: 0.31, RunningTime.GUESSING: 0.12}),
        "complexity": _freeze({Complexity.LOW: 1.0, Complexity.HIGH: 0.73}),
    }),
)


def _check_weights(label: str, weights: Mapping[str, float], factors: tuple[str, ...]) -> None:
    if set(weights) != set(factors):
        raise ConfigurationError(
            f"{label} weights must cover exactly {list(factors)}, got {sorted(weights)}")
    for name, w in weights.items():
        if w < 0:
            raise ConfigurationError(f"{label} weight {name} is negative ({w})")
    total = math.fsum(weights.values())
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise ConfigurationError(f"{label} weights must sum to 1 (got {total:.12g})")


@dataclass(frozen=True)
class WeightConfig:
    target: Mapping[str, float] = field(default_factory=lambda: _freeze(
        {"services": 0.2, "vulnerabilities": 0.2, "connections": 0.2, "exploitation_state": 0.4}))
    attack: Mapping[str, float] = field(default_factory=lambda: _freeze(
        {"vector": 0.3, "complexity": 0.2, "privileges": 0.2, "interaction": 0.1, "running_time": 0.2}))
    scan: Mapping[str, float] = field(default_factory=lambda: _freeze(
        {"range": 0.25, "targets": 0.25, "duration": 0.25, "complexity": 0.25}))

    def __post_init__(self):
        _check_weights("target", self.target, TARGET_FACTORS)
        _check_weights("attack", self.attack, ATTACK_FACTORS)
        _check_weights("scan", self.scan, SCAN_FACTORS)


DEFAULT_WEIGHTS = WeightConfig()


def target_value(factor: str, factors: TargetFactors, tables: ValueTables = DEFAULT_VALUES) -> float:
    if factor == "services":
        return tables.counts["services"](factors.num_services)
    if factor == "vulnerabilities":
        return tables.counts["vulnerabilities"](factors.num_vulnerabilities)
    if factor == "connections":
        return tables.counts["connections"](factors.num_connections)
    if factor == "exploitation_state":
        return tables.exploitation_state[factors.exploitation_state]
    raise ConfigurationError(f"unknown target factor {factor!r}")


def attack_value(factor: str, factors: AttackFactors, tables: ValueTables = DEFAULT_VALUES) -> float:
    if factor not in _ATTACK_LEVELS:
        raise ConfigurationError(f"unknown attack factor {factor!r}")
    return tables.attack[factor][getattr(factors, factor)]


def scan_value(factor: str, factors: ScanFactors, tables: ValueTables = DEFAULT_VALUES) -> float:
    if factor not in _SCAN_LEVELS:
        raise ConfigurationError(f"unknown scan factor {factor!r}")
    return tables.scan[factor][getattr(factors, factor)]


def utility(values: Mapping[str, float], weights: Mapping[str, float]) -> float:
    """Weighted sum of per-factor values; weights must sum to 1."""
    if set(values) != set(weights):
        raise ConfigurationError(f"factor mismatch: values {sorted(values)} vs weights {sorted(weights)}")
    total = math.fsum(weights.values())
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise ConfigurationError(f"weights must sum to 1 (got {total:.12g})")
    return math.fsum(weights[name] * values[name] for name in sorted(weights))


def target_utility(factors: TargetFactors, weights: WeightConfig = DEFAULT_WEIGHTS,
                   tables: ValueTables = DEFAULT_VALUES) -> float:
    return utility({f: target_value(f, factors, tables) for f in TARGET_FACTORS}, weights.target)


def attack_utility(factors: AttackFactors, weights: WeightConfig = DEFAULT_WEIGHTS,
                   tables: ValueTables = DEFAULT_VALUES) -> float:
    return utility({f: attack_value(f, factors, tables) for f in ATTACK_FACTORS}, weights.attack)


def scan_utility(factors: ScanFactors, weights: WeightConfig = DEFAULT_WEIGHTS,
                 tables: ValueTables = DEFAULT_VALUES) -> float:
    return utility({f: scan_value(f, factors, tables) for f in SCAN_FACTORS}, weights.scan)


def target_factors(kb: KnowledgeBase, component: str) -> TargetFactors:
    """Factors of a component computed from what the attacker already knows.

    Counts only include discovered interfaces and interactions whose both
    endpoints are discovered; anything unknown counts as zero.
    """
    arch = kb.architecture
    if arch is None:
        return TargetFactors()
    known = kb.state.known_interfaces
    owner = arch.component_of_interface
    own = [iid for iid in known if owner.get(iid) == component]
    vulns = sum(len(arch.interfaces[iid].vulnerabilities) for iid in own)
    own_set = set(own)
    connections = 0
    for src, dst in arch.interactions:
        if src in known and dst in known and (src in own_set or dst in own_set):
            connections += 1
    state = ExploitationState.NONE
    cap_owner = arch.component_of_capability
    for cap_id in kb.state.capabilities:
        if cap_owner.get(cap_id) == component:
            level = arch.capabilities[cap_id].access
            if level.rank > state.rank:
                state = level
    return TargetFactors(num_services=len(own), num_vulnerabilities=vulns,
                         num_connections=connections, exploitation_state=state)


Ranking = tuple[tuple[str, float], ...]


def rank(scores: Mapping[str, float], rng: random.Random) -> Ranking:
    """Sort non-increasing by utility, drop zeros, break ties with ``rng``."""
    keys = {name: rng.random() for name in sorted(scores)}
    kept = [(name, u) for name, u in scores.items() if u > 0.0]
    kept.sort(key=lambda item: (-item[1], keys[item[0]], item[0]))
    return tuple(kept)


@dataclass(frozen=True)
class StrategyMemory:
    weights: WeightConfig = DEFAULT_WEIGHTS
    values: ValueTables = DEFAULT_VALUES
    target_ranking: Ranking = ()
    attack_ranking: Ranking = ()
    scan_ranking: Ranking = ()

    def utility_of(self, action_id: str) -> float | None:
        for ranking in (self.attack_ranking, self.scan_ranking, self.target_ranking):
            for name, u in ranking:
                if name == action_id:
                    return u
        return None


def memory_update(memory: StrategyMemory, kb: KnowledgeBase, rng: random.Random | None = None) -> StrategyMemory:
    """Recompute the three rankings over the currently available options."""
    rng = rng if rng is not None else random.Random(0)
    targets = {c: target_utility(target_factors(kb, c), memory.weights, memory.values)
               for c in available_targets(kb)}
    attacks = {a.id: attack_utility(a.factors, memory.weights, memory.values) for a in available_attacks(kb)}
    scans = {s.id: scan_utility(s.factors, memory.weights, memory.values) for s in available_scans(kb)}
    return replace(
        memory,
        target_ranking=rank(targets, rng),
        attack_ranking=rank(attacks, rng),
        scan_ranking=rank(scans, rng),
    )


def _parse_weight_group(label: str, data, defaults: Mapping[str, float]) -> dict:
    if data is None:
        return dict(defaults)
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"weights.{label} must be a mapping")
    merged = dict(defaults)
    for name, value in data.items():
        if name not in defaults:
            raise ConfigurationError(f"weights.{label}: unknown factor {name!r}")
        try:
            merged[name] = float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"weights.{label}.{name}: {value!r} is not a number") from None
    return merged


def _parse_case_table(label: str, data, enum, defaults: Mapping) -> dict:
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"values.{label} must be a mapping of level to value")
    table = dict(defaults)
    for level, value in data.items():
        try:
            table[enum.parse(level)] = float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"values.{label}.{level}: {value!r} is not a number") from None
    return table


def load_weight_config(source: str | Path | Mapping) -> tuple[WeightConfig, ValueTables]:
    """Read weight and value-table overrides; unspecified entries keep their defaults."""
    if isinstance(source, Mapping):
        doc = source
    else:
        try:
            doc = yaml.safe_load(Path(source).read_text())
        except OSError as exc:
            raise ConfigurationError(f"{source}: cannot read weights file ({exc.strerror})") from None
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{source}: invalid YAML ({exc})") from None
    doc = doc or {}
    if not isinstance(doc, Mapping):
        raise ConfigurationError("weights file must be a mapping")
    unknown = set(doc) - {"version", "kind", "weights", "values"}
    if unknown:
        raise ConfigurationError(f"unknown top-level keys {sorted(unknown)}")
    weights_doc = doc.get("weights") or {}
    weights = WeightConfig(
        target=_freeze(_parse_weight_group("target", weights_doc.get("target"), DEFAULT_WEIGHTS.target)),
        attack=_freeze(_parse_weight_group("attack", weights_doc.get("attack"), DEFAULT_WEIGHTS.attack)),
        scan=_freeze(_parse_weight_group("scan", weights_doc.get("scan"), DEFAULT_WEIGHTS.scan)),
    )

    values_doc = doc.get("values") or {}
    counts = dict(DEFAULT_VALUES.counts)
    state_table = dict(DEFAULT_VALUES.exploitation_state)
    for name, spec in (values_doc.get("target") or {}).items():
        if name in counts:
            if not isinstance(spec, Mapping):
                raise ConfigurationError(f"values.target.{name} must have exponent/cap")
            counts[name] = CountValue(exponent=spec.get("exponent", counts[name].exponent),
                                      cap=spec.get("cap", counts[name].cap))
        elif name == "exploitation_state":
            state_table = _parse_case_table("target.exploitation_state", spec, ExploitationState, state_table)
        else:
            raise ConfigurationError(f"values.target: unknown factor {name!r}")
    attack = {k: dict(v) for k, v in DEFAULT_VALUES.attack.items()}
    for name, spec in (values_doc.get("attack") or {}).items():
        if name not in _ATTACK_LEVELS:
            raise ConfigurationError(f"values.attack: unknown factor {name!r}")
        attack[name] = _parse_case_table(f"attack.{name}", spec, _ATTACK_LEVELS[name], attack[name])
    scan = {k: dict(v) for k, v in DEFAULT_VALUES.scan.items()}
    for name, spec in (values_doc.get("scan") or {}).items():
        if name not in _SCAN_LEVELS:
            raise ConfigurationError(f"values.scan: unknown factor {name!r}")
        scan[name] = _parse_case_table(f"scan.{name}", spec, _SCAN_LEVELS[name], scan[name])
    tables = ValueTables(
        counts=_freeze(counts),
        exploitation_state=_freeze(state_table),
        attack=_freeze({k: _freeze(v) for k, v in attack.items()}),
        scan=_freeze({k: _freeze(v) for k, v in scan.items()}),
    )
    return weights, tables
