"""Decision factors attached to targets, attack tactics and scan templates."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ConfigurationError


class _Level(str, Enum):
    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for member in cls:
            if str(value).lower() == member.value.lower():
                return member
        allowed = ", ".join(m.value for m in cls)
        raise ConfigurationError(f"{cls.__name__}: {value!r} is not one of {allowed}")


class ExploitationState(_Level):
    NONE = "None"
    INITIAL = "Initial"
    ELEVATED = "Elevated"
    C2C = "C2C"

    @property
    def rank(self) -> int:
        return list(ExploitationState).index(self)


class AttackVector(_Level):
    NETWORK = "Network"
    ADJACENT = "Adjacent"
    LOCAL = "Local"
    PHYSICAL = "Physical"


class Complexity(_Level):
    LOW = "Low"
    HIGH = "High"


class Privileges(_Level):
    NONE = "None"
    LOW = "Low"
    HIGH = "High"


class UserInteraction(_Level):
    NONE = "None"
    REQUIRED = "Required"


class RunningTime(_Level):
    QUICK = "Quick"
    MEDIUM = "Medium"
    LONG = "Long"
    GUESSING = "Guessing"


class ScanRange(_Level):
    NETWORK = "Network"
    HOST = "Host"
    LOCAL = "Local"


class ScanTargets(_Level):
    NETWORK = "Network"
    MULTIPLE = "Multiple"
    ONE = "One"


@dataclass(frozen=True)
class TargetFactors:
    num_services: int = 0
    num_vulnerabilities: int = 0
    num_connections: int = 0
    exploitation_state: ExploitationState = ExploitationState.NONE

    def __post_init__(self):
        for name in ("num_services", "num_vulnerabilities", "num_connections"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")


@dataclass(frozen=True)
class AttackFactors:
    vector: AttackVector = AttackVector.NETWORK
    complexity: Complexity = Complexity.LOW
    privileges: Privileges = Privileges.NONE
    interaction: UserInteraction = UserInteraction.NONE
    running_time: RunningTime = RunningTime.MEDIUM

    @classmethod
    def from_mapping(cls, data: dict | None) -> "AttackFactors":
        data = dict(data or {})
        unknown = set(data) - {"vector", "complexity", "privileges", "interaction", "running_time"}
        if unknown:
            raise ConfigurationError(f"unknown attack factor(s): {sorted(unknown)}")
        return cls(
            vector=AttackVector.parse(data.get("vector", "Network")),
            complexity=Complexity.parse(data.get("complexity", "Low")),
            privileges=Privileges.parse(data.get("privileges", "None")),
            interaction=UserInteraction.parse(data.get("interaction", "None")),
            running_time=RunningTime.parse(data.get("running_time", "Medium")),
        )

    def to_mapping(self) -> dict:
        return {
            "vector": self.vector.value,
            "complexity": self.complexity.value,
            "privileges": self.privileges.value,
            "interaction": self.interaction.value,
            "running_time": self.running_time.value,
        }


@dataclass(frozen=True)
class ScanFactors:
    range: ScanRange = ScanRange.NETWORK
    targets: ScanTargets = ScanTargets.NETWORK
    duration: RunningTime = RunningTime.MEDIUM
    complexity: Complexity = Complexity.LOW

    @classmethod
    def from_mapping(cls, data: dict | None) -> "ScanFactors":
        data = dict(data or {})
        unknown = set(data) - {"range", "targets", "duration", "complexity"}
        if unknown:
            raise ConfigurationError(f"unknown scan factor(s): {sorted(unknown)}")
        return cls(
            range=ScanRange.parse(data.get("range", "Network")),
            targets=ScanTargets.parse(data.get("targets", "Network")),
            duration=RunningTime.parse(data.get("duration", "Medium")),
            complexity=Complexity.parse(data.get("complexity", "Low")),
        )

    def to_mapping(self) -> dict:
        return {
            "range": self.range.value,
            "targets": self.targets.value,
            "duration": self.duration.value,
            "complexity": self.complexity.value,
        }
