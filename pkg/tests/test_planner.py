import itertools
import random

import pytest

from autopentest.errors import ConfigurationError
from autopentest.knowledge import Event, EventKind, KnowledgeBase, transition
from autopentest.model import AttackStep, AttackTactic, PentestState, ScanKind, ScanTemplate
from autopentest.planner import (
    PlannerConfig,
    attack_selection,
    interferes,
    next_move,
    scan_selection,
    target_selection,
)
from autopentest.simenv import load_bundled
from autopentest.utility import StrategyMemory, memory_update

EXAMPLE_STATE = PentestState(known_components=frozenset({"WebServer", "APIGate"}),
                             known_interfaces=frozenset({"HTTP", "gRPC"}))


def example_kb():
    scenario, repertoire = load_bundled("webapp")
    return KnowledgeBase.create(repertoire.attacks, repertoire.scans, state=EXAMPLE_STATE,
                                architecture=scenario.architecture)


def test_budgets_must_be_positive():
    with pytest.raises(ConfigurationError):
        PlannerConfig(max_targets=0)
    with pytest.raises(ConfigurationError):
        PlannerConfig(max_scans=0)
    assert PlannerConfig(max_attacks=3).scan_budget == 3
    assert PlannerConfig(max_attacks=3, max_scans=1).scan_budget == 1


def test_target_budget_exhausted_selects_nothing():
    kb = transition(example_kb(), Event(EventKind.TARGET_ENGAGED, "WebServer"))
    memory = memory_update(StrategyMemory(), kb, random.Random(0))
    assert target_selection(memory.target_ranking, kb, PlannerConfig(max_targets=1)) == ()


def test_single_target_tie_is_broken_by_seed():
    picks = set()
    for seed in range(16):
        kb = example_kb()
        memory = memory_update(StrategyMemory(), kb, random.Random(seed))
        chosen = target_selection(memory.target_ranking, kb, PlannerConfig())
        assert len(chosen) == 1
        picks.add(chosen[0])
    assert picks == {"WebServer", "APIGate"}


def test_two_targets_take_both():
    kb = example_kb()
    memory = memory_update(StrategyMemory(), kb, random.Random(0))
    assert set(target_selection(memory.target_ranking, kb, PlannerConfig(max_targets=2))) == {"WebServer", "APIGate"}


def test_webserver_selected_means_form_cracking():
    kb = transition(example_kb(), Event(EventKind.TARGET_ENGAGED, "WebServer"))
    memory = memory_update(StrategyMemory(), kb, random.Random(0))
    chosen = attack_selection(memory.attack_ranking, kb, PlannerConfig())
    assert [t.id for t in chosen] == ["form-cracking"]


def test_no_attacks_when_all_failed():
    kb = transition(example_kb(), Event(EventKind.TARGET_ENGAGED, "WebServer"))
    memory = memory_update(StrategyMemory(), kb, random.Random(0))
    for a in ("form-cracking", "grpc-oob"):
        kb = transition(kb, Event(EventKind.ATTACK_STARTED, a))
        kb = transition(kb, Event(EventKind.ATTACK_FAILED, a))
    assert attack_selection(memory.attack_ranking, kb, PlannerConfig(max_attacks=2)) == ()


def _shared_interface_kb():
    attacks = [AttackTactic(id=f"a{k}", target="H", steps=(AttackStep(interface="i"),)) for k in range(3)]
    attacks.append(AttackTactic(id="b", target="H", steps=(AttackStep(interface="j"),)))
    state = PentestState(known_components=frozenset({"H"}), known_interfaces=frozenset({"i", "j"}))
    kb = KnowledgeBase.create(attacks, state=state)
    return transition(kb, Event(EventKind.TARGET_ENGAGED, "H")), attacks


def test_interfering_attacks_keep_the_higher_ranked():
    kb, attacks = _shared_interface_kb()
    ranking = (("a1", 0.9), ("a0", 0.8), ("b", 0.7), ("a2", 0.6))
    chosen = attack_selection(ranking, kb, PlannerConfig(max_attacks=2))
    assert [t.id for t in chosen] == ["a1", "b"]


def test_selection_is_the_maximal_admissible_prefix():
    kb, attacks = _shared_interface_kb()
    by_id = {a.id: a for a in attacks}
    for order in itertools.permutations(by_id):
        ranking = tuple((a, 1.0 - k / 10) for k, a in enumerate(order))
        for budget in (1, 2, 3):
            chosen = [t.id for t in attack_selection(ranking, kb, PlannerConfig(max_attacks=budget))]
            # brute force: walk the ranking, accept each non-interfering attack until full
            expected = []
            for a in order:
                if len(expected) < budget and not interferes(by_id[a], [by_id[e] for e in expected]):
                    expected.append(a)
            assert chosen == expected


def test_scan_selection_examples():
    net = ScanTemplate(id="net")
    local = ScanTemplate(id="local", kind=ScanKind.LOCAL, requires=frozenset({"shell"}), component="H")
    kb = KnowledgeBase.create(scans=[net, local])
    ranking = (("local", 0.9), ("net", 0.5))
    assert [s.id for s in scan_selection(ranking, kb, PlannerConfig(max_attacks=2))] == ["net"]

    three = [ScanTemplate(id=f"s{k}") for k in range(3)]
    kb = KnowledgeBase.create(scans=three)
    ranking = (("s2", 0.9), ("s0", 0.8), ("s1", 0.7))
    assert [s.id for s in scan_selection(ranking, kb, PlannerConfig(max_scans=2))] == ["s2", "s0"]


def test_next_move_with_empty_rankings_is_idle():
    move = next_move(StrategyMemory(), KnowledgeBase.create(), PlannerConfig())
    assert move.attacks == () and move.scans == () and move.targets == ()


def test_next_move_on_worked_example():
    kb = example_kb()
    memory = memory_update(StrategyMemory(), kb, random.Random(0))
    move = next_move(memory, kb, PlannerConfig())
    assert len(move.targets) == 1 and len(move.attacks) == 1
    assert move.attacks[0].target == move.targets[0]
    assert move.kb.active_targets == set(move.targets)
    assert [e.kind for e in move.events] == [EventKind.TARGET_ENGAGED]


def test_first_metasploitable2_move_is_the_network_scan():
    scenario, repertoire = load_bundled("metasploitable2")
    kb = KnowledgeBase.create(repertoire.attacks, repertoire.scans, architecture=scenario.architecture)
    memory = memory_update(StrategyMemory(), kb, random.Random(0))
    move = next_move(memory, kb, PlannerConfig())
    assert move.attacks == ()
    assert [s.id for s in move.scans] == ["S0"]
