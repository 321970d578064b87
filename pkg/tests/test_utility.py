import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from autopentest.errors import ConfigurationError
from autopentest.factors import (
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
from autopentest.knowledge import KnowledgeBase
from autopentest.model import PentestState
from autopentest.simenv import load_bundled
from autopentest.utility import (
    StrategyMemory,
    WeightConfig,
    attack_utility,
    attack_value,
    load_weight_config,
    memory_update,
    rank,
    scan_utility,
    scan_value,
    target_factors,
    target_utility,
    target_value,
    utility,
)


def test_target_value_examples():
    assert target_value("services", TargetFactors(num_services=0)) == 0.0
    assert target_value("vulnerabilities", TargetFactors(num_vulnerabilities=3)) == 0.9
    assert target_value("exploitation_state", TargetFactors(exploitation_state=ExploitationState.INITIAL)) == 0.9


def test_attack_and_scan_value_examples():
    assert attack_value("vector", AttackFactors(vector=AttackVector.PHYSICAL)) == 0.23
    assert attack_value("complexity", AttackFactors(complexity=Complexity.LOW)) == 1.0
    assert attack_value("running_time", AttackFactors(running_time=RunningTime.GUESSING)) == 0.12
    assert scan_value("range", ScanFactors(range=ScanRange.LOCAL)) == 0.32
    assert scan_value("duration", ScanFactors(duration=RunningTime.QUICK)) == 1.0
    assert scan_value("targets", ScanFactors(targets=ScanTargets.ONE)) == 0.32


def test_unknown_factor_names_raise():
    with pytest.raises(ConfigurationError):
        target_value("colour", TargetFactors())
    with pytest.raises(ConfigurationError):
        attack_value("colour", AttackFactors())
    with pytest.raises(ConfigurationError):
        scan_value("colour", ScanFactors())


def test_utility_of_all_ones_is_one():
    assert utility({"a": 1.0, "b": 1.0, "c": 1.0}, {"a": 0.5, "b": 0.3, "c": 0.2}) == 1.0


def test_utility_rejects_weights_not_summing_to_one():
    with pytest.raises(ConfigurationError):
        utility({"a": 1.0, "b": 1.0}, {"a": 0.5, "b": 0.4})
    with pytest.raises(ConfigurationError):
        WeightConfig(attack={"vector": 0.3, "complexity": 0.2, "privileges": 0.2, "interaction": 0.1,
                             "running_time": 0.1})


levels = st.fixed_dictionaries({
    "vector": st.sampled_from(list(oracles.ATTACK_VALUES["vector"])),
    "complexity": st.sampled_from(list(oracles.ATTACK_VALUES["complexity"])),
    "privileges": st.sampled_from(list(oracles.ATTACK_VALUES["privileges"])),
    "interaction": st.sampled_from(list(oracles.ATTACK_VALUES["interaction"])),
    "running_time": st.sampled_from(list(oracles.ATTACK_VALUES["running_time"])),
})
scan_levels = st.fixed_dictionaries({
    "range": st.sampled_from(list(oracles.SCAN_VALUES["range"])),
    "targets": st.sampled_from(list(oracles.SCAN_VALUES["targets"])),
    "duration": st.sampled_from(list(oracles.SCAN_VALUES["duration"])),
    "complexity": st.sampled_from(list(oracles.SCAN_VALUES["complexity"])),
})


@given(levels)
def test_attack_utility_matches_exact_oracle(lv):
    factors = AttackFactors(vector=AttackVector.parse(lv["vector"]), complexity=Complexity.parse(lv["complexity"]),
                            privileges=Privileges.parse(lv["privileges"]),
                            interaction=UserInteraction.parse(lv["interaction"]),
                            running_time=RunningTime.parse(lv["running_time"]))
    u = attack_utility(factors)
    assert abs(u - oracles.attack_utility(**lv)) <= 1e-12
    assert 0.0 <= u <= 1.0


@given(scan_levels)
def test_scan_utility_matches_exact_oracle(lv):
    factors = ScanFactors(range=ScanRange.parse(lv["range"]), targets=ScanTargets.parse(lv["targets"]),
                          duration=RunningTime.parse(lv["duration"]), complexity=Complexity.parse(lv["complexity"]))
    assert abs(scan_utility(factors) - oracles.scan_utility(**lv)) <= 1e-12


@given(st.integers(0, 15), st.integers(0, 15), st.integers(0, 15), st.sampled_from(list(oracles.EXPLOITATION)))
def test_target_utility_matches_exact_oracle(s, v, c, e):
    factors = TargetFactors(s, v, c, ExploitationState.parse(e))
    assert abs(target_utility(factors) - oracles.target_utility(s, v, c, e)) <= 1e-12


def test_rank_drops_zeros_and_sorts():
    ranking = rank({"a": 0.5, "b": 0.0, "c": 0.9, "d": 0.5}, random.Random(1))
    assert [u for _, u in ranking] == [0.9, 0.5, 0.5]
    assert ranking[0][0] == "c"


def test_rank_tie_break_depends_on_seed_only():
    scores = {f"x{k}": 0.5 for k in range(8)}
    orders = {tuple(n for n, _ in rank(scores, random.Random(seed))) for seed in range(20)}
    assert len(orders) > 1
    assert rank(scores, random.Random(3)) == rank(scores, random.Random(3))


def test_memory_update_on_empty_kb_gives_empty_rankings():
    memory = memory_update(StrategyMemory(), KnowledgeBase.create())
    assert memory.target_ranking == memory.attack_ranking == memory.scan_ranking == ()


def test_worked_example_targets_tie_after_initial_scan():
    scenario, repertoire = load_bundled("webapp")
    state = PentestState(known_components=frozenset({"WebServer", "APIGate"}),
                         known_interfaces=frozenset({"HTTP", "gRPC"}))
    kb = KnowledgeBase.create(repertoire.attacks, repertoire.scans, state=state,
                              architecture=scenario.architecture)
    memory = memory_update(StrategyMemory(), kb, random.Random(0))
    (first, u1), (second, u2) = memory.target_ranking
    assert {first, second} == {"WebServer", "APIGate"}
    assert u1 == u2
    assert target_factors(kb, "WebServer") == target_factors(kb, "APIGate")
    assert [a for a, _ in memory.attack_ranking] == ["grpc-oob", "form-cracking"]


def test_target_factors_count_only_known_elements():
    scenario, repertoire = load_bundled("webapp")
    kb = KnowledgeBase.create(state=PentestState(known_components=frozenset({"APIGate"}),
                                                 known_interfaces=frozenset({"gRPC"})),
                              architecture=scenario.architecture)
    factors = target_factors(kb, "APIGate")
    assert factors.num_services == 1 and factors.num_connections == 0


def test_load_weight_config_overrides_and_validates(tmp_path):
    weights, tables = load_weight_config({"weights": {"scan": {"range": 0.4, "targets": 0.1}},
                                          "values": {"attack": {"vector": {"Adjacent": 0.5}}}})
    assert weights.scan["range"] == 0.4
    assert tables.attack["vector"][AttackVector.ADJACENT] == 0.5
    assert tables.attack["vector"][AttackVector.NETWORK] == 1.0
    with pytest.raises(ConfigurationError, match="sum to 1"):
        load_weight_config({"weights": {"target": {"services": 0.1}}})
    with pytest.raises(ConfigurationError):
        load_weight_config({"values": {"attack": {"vector": {"Adjacent": 1.5}}}})
    with pytest.raises(ConfigurationError):
        load_weight_config({"colour": 1})
    path = tmp_path / "w.yaml"
    path.write_text("weights:\n  attack:\n    vector: 0.2\n    interaction: 0.2\n")
    weights, _ = load_weight_config(path)
    assert weights.attack["interaction"] == 0.2
