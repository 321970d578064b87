"""Hypothesis strategies for random scenarios, repertoires and graphs.

Generated scenarios are reachable by construction: later steps of a tactic
only need what earlier steps grant or what the first step already needs,
and no scan's findings depend on capabilities gained later.
"""
import random

from hypothesis import strategies as st

from autopentest.factors import AttackFactors, AttackVector, Complexity, ExploitationState, RunningTime
from autopentest.model import (
    AttackStep,
    AttackTactic,
    Capability,
    Component,
    Interface,
    ScanKind,
    ScanTemplate,
    SecurityInformedArchitecture,
)
from autopentest.report import ExploitationGraph
from autopentest.simenv import AttackRule, Repertoire, Scenario, ScanRule, StepOutcome, Visibility

ACCESS = list(ExploitationState)


def random_scenario(seed, stochastic=True, max_components=3, max_attacks=8):
    """A random (Scenario, Repertoire) pair with 1..max_components hosts.

    Built from a plain seeded generator: drawing every field through
    hypothesis is an order of magnitude slower and shrinking buys little here.
    """
    rng = random.Random(seed)
    n_comp = rng.randint(1, max_components)
    components, local_ifaces, remote_ifaces = [], {}, []
    all_caps = []
    for c in range(n_comp):
        ifaces = [Interface(id=f"H{c}:I{k}", vulnerabilities=frozenset(f"v{k}.{j}" for j in range(rng.randint(0, 2))))
                  for k in range(rng.randint(1, 3))]
        caps = [Capability(id=f"H{c}:K{k}", access=rng.choice(ACCESS)) for k in range(rng.randint(1, 4))]
        all_caps.extend(cap.id for cap in caps)
        components.append(Component(id=f"H{c}", interfaces=tuple(ifaces), capabilities=tuple(caps),
                                    root_capabilities=frozenset([caps[-1].id])))
        for iface in ifaces:
            # the first interface of H0 stays remote so every run has an entry point
            if (c > 0 or iface is not ifaces[0]) and rng.random() < 0.5:
                local_ifaces.setdefault(f"H{c}", []).append(iface.id)
            else:
                remote_ifaces.append(iface.id)
    all_ifaces = [i.id for comp in components for i in comp.interfaces]
    interactions = tuple((rng.choice(all_ifaces), rng.choice(all_ifaces)) for _ in range(rng.randint(0, 3)))
    arch = SecurityInformedArchitecture(components=tuple(components), interactions=interactions)
    visibility = {i: Visibility(segment=None, local_only=True) for ids in local_ifaces.values() for i in ids}

    def maybe_cap(p=0.5):
        return frozenset([rng.choice(all_caps)]) if rng.random() < p else frozenset()

    scans = [ScanTemplate(id="S0", duration=rng.randint(1, 40))]
    scan_rules = {"S0": ScanRule(reveals=tuple(remote_ifaces))}
    for host, ids in sorted(local_ifaces.items()):
        sid = f"S{len(scans)}"
        scans.append(ScanTemplate(id=sid, requires=frozenset([rng.choice(all_caps)]), kind=ScanKind.LOCAL,
                                  component=host, duration=rng.randint(1, 40)))
        scan_rules[sid] = ScanRule(reveals=tuple(ids), grants=maybe_cap())

    attacks, attack_rules = [], {}
    outcomes = [1.0, 1.0, 1.0, 0.0, 0.5, 0.8] if stochastic else [1.0, 1.0, 0.0]
    for a in range(rng.randint(0, max_attacks)):
        comp = rng.choice(components)
        iface_choices = [None] + [i.id for i in comp.interfaces]
        first_needs = maybe_cap()
        steps, granted = [], set()
        for k in range(rng.randint(1, 2)):
            pool = sorted(granted | first_needs)
            needs = first_needs if k == 0 else frozenset([rng.choice(pool)] if pool and rng.random() < 0.5 else [])
            gives = frozenset(rng.sample(all_caps, rng.randint(1, min(2, len(all_caps)))))
            granted |= gives
            steps.append(AttackStep(interface=rng.choice(iface_choices), requires=needs, grants=gives))
        factors = AttackFactors(vector=rng.choice(list(AttackVector)), complexity=rng.choice(list(Complexity)),
                                running_time=rng.choice(list(RunningTime)))
        tags = frozenset([rng.choice(["t1", "t2"])] if rng.random() < 0.5 else [])
        tactic = AttackTactic(id=f"E{a}", steps=tuple(steps), target=comp.id, factors=factors,
                              duration=rng.randint(0, 30), exclusion_tags=tags)
        attacks.append(tactic)
        attack_rules[tactic.id] = AttackRule(steps=(StepOutcome(rng.choice(outcomes)),))
    scenario = Scenario(architecture=arch, visibility=visibility, attack_rules=attack_rules,
                        scan_rules=scan_rules, name="random")
    return scenario, Repertoire(attacks=tuple(attacks), scans=tuple(scans), name="random")


def scenarios(stochastic=True, max_components=3, max_attacks=8):
    return st.integers(0, 2**32).map(
        lambda seed: random_scenario(seed, stochastic, max_components, max_attacks))


NODE_KINDS = "SEPICF"


def random_graph(seed):
    rng = random.Random(seed)
    names = [f"N{k}" for k in range(8)]
    nodes = {(rng.choice(names), rng.choice(NODE_KINDS)) for _ in range(rng.randint(0, 8))}
    ids = sorted({n for n, _ in nodes})
    edges = {(rng.choice(ids), rng.choice(ids)) for _ in range(rng.randint(0, 12))} if ids else set()
    return ExploitationGraph(nodes=frozenset(nodes), edges=frozenset(edges))


def graphs():
    return st.integers(0, 2**32).map(random_graph)
