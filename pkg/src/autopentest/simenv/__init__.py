"""Simulated managed system: scenario ground truth and discrete-event execution."""
from .mdp import import_mdp_scenario
from .scenario import (
    BUNDLED,
    AttackRule,
    Repertoire,
    Scenario,
    ScanRule,
    StepOutcome,
    Visibility,
    bundled_path,
    check_repertoire,
    load_bundled,
    load_repertoire,
    load_scenario,
    read_document,
)
from .simulator import (
    AttackOutcome,
    Completion,
    GroundTruthOracle,
    ScanOutcome,
    SimClock,
    Simulator,
    execute_attack,
    execute_scan,
    to_ms,
)

__all__ = [
    "BUNDLED", "AttackRule", "Repertoire", "Scenario", "ScanRule", "StepOutcome", "Visibility",
    "bundled_path", "check_repertoire", "load_bundled", "load_repertoire", "load_scenario", "read_document",
    "import_mdp_scenario", "AttackOutcome", "Completion", "GroundTruthOracle", "ScanOutcome", "SimClock",
    "Simulator", "execute_attack", "execute_scan", "to_ms",
]
