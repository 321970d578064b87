"""Adaptive autonomous penetration testing against simulated targets.

A MAPE-K controller ranks targets, attacks and scans by weighted utility,
dispatches them within concurrency budgets and records everything it learns
in an immutable knowledge base.
"""
from .engine import DEFAULT_SEED, Engine, EngineConfig, EngineTrace, HaltReason, run_pentest
from .errors import (
    ConfigurationError,
    ImportFormatError,
    LoadError,
    MalformedRepertoireError,
    PentestError,
    ProtocolError,
    SimulatorContractError,
)
from .knowledge import Event, EventKind, KnowledgeBase, transition
from .model import (
    AttackStep,
    AttackTactic,
    Capability,
    Component,
    Interface,
    PentestState,
    ScanTemplate,
    SecurityInformedArchitecture,
    goal_reached,
)
from .planner import PlannerConfig, next_move
from .report import ExploitationGraph, build_graph, build_report, causal_path, export_dot, merge_graphs
from .simenv import Repertoire, Scenario, import_mdp_scenario, load_bundled, load_repertoire, load_scenario
from .utility import DEFAULT_VALUES, DEFAULT_WEIGHTS, StrategyMemory, ValueTables, WeightConfig

__all__ = [
    "AttackStep", "AttackTactic", "Capability", "Component", "ConfigurationError", "DEFAULT_SEED",
    "DEFAULT_VALUES", "DEFAULT_WEIGHTS", "Engine", "EngineConfig", "EngineTrace", "Event", "EventKind",
    "ExploitationGraph", "HaltReason", "ImportFormatError", "Interface", "KnowledgeBase", "LoadError",
    "MalformedRepertoireError", "PentestError", "PentestState", "PlannerConfig", "ProtocolError",
    "Repertoire", "ScanTemplate", "Scenario", "SecurityInformedArchitecture", "SimulatorContractError",
    "StrategyMemory", "ValueTables", "WeightConfig", "build_graph", "build_report", "causal_path",
    "export_dot", "goal_reached", "import_mdp_scenario", "load_bundled", "load_repertoire", "load_scenario",
    "merge_graphs", "next_move", "run_pentest", "transition",
]
