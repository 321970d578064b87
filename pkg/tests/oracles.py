"""Independent reference values used by the tests.

Nothing here imports the package under test. Value tables are transcribed
by hand, utilities are recomputed with exact fractions, and the expected
exploitation graphs are typed out edge by edge.
"""
from fractions import Fraction as F

TARGET_WEIGHTS = {"S": F("0.2"), "V": F("0.2"), "C": F("0.2"), "E": F("0.4")}
ATTACK_WEIGHTS = {"vector": F("0.3"), "complexity": F("0.2"), "privileges": F("0.2"),
                  "interaction": F("0.1"), "running_time": F("0.2")}
SCAN_WEIGHTS = {"range": F("0.25"), "targets": F("0.25"), "duration": F("0.25"), "complexity": F("0.25")}

EXPLOITATION = {"None": F("0.73"), "Initial": F("0.9"), "Elevated": F("1.0"), "C2C": F("0.23")}
ATTACK_VALUES = {
    "vector": {"Network": F("1.0"), "Adjacent": F("0.73"), "Local": F("0.64"), "Physical": F("0.23")},
    "complexity": {"Low": F("1.0"), "High": F("0.57")},
    "privileges": {"None": F("1.0"), "Low": F("0.73"), "High": F("0.32")},
    "interaction": {"None": F("1.0"), "Required": F("0.73")},
    "running_time": {"Quick": F("1.0"), "Medium": F("0.73"), "Long": F("0.31"), "Guessing": F("0.12")},
}
SCAN_VALUES = {
    "range": {"Network": F("1.0"), "Host": F("0.73"), "Local": F("0.32")},
    "targets": {"Network": F("1.0"), "Multiple": F("0.73"), "One": F("0.32")},
    "duration": {"Quick": F("1.0"), "Medium": F("0.73"), "Long": F("0.31"), "Guessing": F("0.12")},
    "complexity": {"Low": F("1.0"), "High": F("0.73")},
}


def target_utility(services, vulns, connections, state):
    values = {
        "S": F(min(services, 10), 10),
        "V": F(min(vulns ** 2, 10), 10),
        "C": F(min(connections ** 1.5, 10)) / 10,
        "E": EXPLOITATION[state],
    }
    return float(sum(TARGET_WEIGHTS[k] * values[k] for k in TARGET_WEIGHTS))


def attack_utility(**levels):
    return float(sum(ATTACK_WEIGHTS[k] * ATTACK_VALUES[k][levels[k]] for k in ATTACK_WEIGHTS))


def scan_utility(**levels):
    return float(sum(SCAN_WEIGHTS[k] * SCAN_VALUES[k][levels[k]] for k in SCAN_WEIGHTS))


# Worked example: both attacks run over the network without privileges or
# user interaction; form cracking is low complexity but slow, the gRPC
# exploit is high complexity but quick.
FORM_CRACKING = dict(vector="Network", complexity="Low", privileges="None", interaction="None",
                     running_time="Long")
GRPC_EXPLOIT = dict(vector="Network", complexity="High", privileges="None", interaction="None",
                    running_time="Quick")
FORM_CRACKING_UTILITY = 0.862   # 0.3 + 0.2 + 0.2 + 0.1 + 0.2 * 0.31
GRPC_EXPLOIT_UTILITY = 0.914    # 0.3 + 0.2 * 0.57 + 0.2 + 0.1 + 0.2
PRINTED_FORM_CRACKING = 0.863
PRINTED_GRPC_EXPLOIT = 0.903


def rank_oracle(scores):
    """Non-zero entries sorted by descending utility; ties may come in any order."""
    return sorted(((name, u) for name, u in scores.items() if u > 0), key=lambda item: -item[1])


# ------------------------------------------------------------------ graphs

def _fan(src, dsts):
    return {(src, d) for d in dsts}


def metasploitable2_edges():
    ifaces = [f"I{k}" for k in range(16)]
    edges = _fan("S0", ifaces)
    edges |= {(f"I{k}", f"E{k}") for k in range(16)}
    edges |= {("E0", "C4"), ("E1", "C4"), ("E4", "C5"), ("C4", "P0")}
    edges |= _fan("C5", ["S1", "S2", "S3"])
    edges |= {("S1", "C1"), ("S2", "C2"), ("S3", "C3")}
    edges |= {("C1", "E16"), ("C2", "E17"), ("C3", "E18")}
    edges |= {(f"E{k}", "C6") for k in list(range(5, 19))}
    edges.add(("P0", "C6"))
    return edges


def metasploitable2_nodes():
    return ({"S0", "S1", "S2", "S3", "P0"} | {f"E{k}" for k in range(19)}
            | {f"I{k}" for k in range(16)} | {f"C{k}" for k in range(1, 7)})


def metasploitable3_edges():
    edges = _fan("S0", [f"I{k}" for k in range(18)])
    edges |= {(f"I{k}", f"E{k}") for k in range(18)}
    edges |= {("E0", "C0"), ("E1", "C1"), ("E2", "C2"), ("E3", "C3"), ("E5", "C4"), ("E11", "C5"),
              ("E13", "C6"), ("E14", "C7"), ("E15", "C8"), ("E15", "C9"), ("E16", "C10"), ("E17", "C11")}
    edges |= {("C2", "E19"), ("C3", "E20"), ("C4", "E21"), ("C5", "E22"), ("C6", "E23"), ("C7", "E24"),
              ("C0", "E26"), ("C1", "E27")}
    edges |= {(a, "E28") for a in ("E19", "E20", "E4", "E21", "E6", "E7", "E8", "E9", "E10", "E22")}
    edges |= {("P0", "E19"), ("P0", "E20"), ("E23", "E29"), ("E24", "E29")}
    edges |= {("E26", "S1"), ("E27", "S1"), ("E28", "S1"), ("S1", "E30")}
    edges |= {("E29", "C12"), ("E30", "C12"), ("C11", "E31"), ("E31", "C13")}
    return edges


def metasploitable3_nodes():
    actions = {f"E{k}" for k in range(18)} | {f"E{k}" for k in (19, 20, 21, 22, 23, 24, 26, 27, 28, 29, 30, 31)}
    return ({"S0", "S1", "P0"} | actions | {f"I{k}" for k in range(18)} | {f"C{k}" for k in range(14)})


METASPLOITABLE3_LONGEST = ["S0", "E2", "P0", "E19", "E28", "S1", "E30"]

# Virtual durations in seconds of every action of the two Metasploitable encodings.
METASPLOITABLE2_DURATIONS = {
    "S0": 30, "S1": 7, "S2": 9, "S3": 12, "E0": 10, "E1": 2, "E2": 7, "E3": 5.8, "E4": 8.8, "E5": 8,
    "E6": 5.69, "E7": 1, "E8": 1, "E9": 1, "E10": 2, "E11": 17, "E12": 3, "E13": 16, "E14": 5, "E15": 1,
    "E16": 1, "E17": 1, "E18": 1, "P0": 0.1,
}
METASPLOITABLE3_DURATIONS = {
    "S0": 120, "S1": 1, "E0": 9, "E1": 8, "E2": 7, "E3": 8, "E4": 1, "E5": 7, "E6": 1, "E7": 2, "E8": 2,
    "E9": 2, "E10": 1.5, "E11": 8, "E12": 9, "E13": 12, "E14": 14, "E15": 11, "E16": 8, "E17": 15,
    "E19": 2, "E20": 2, "E21": 1, "E22": 1, "E23": 2, "E24": 2, "E26": 1, "E27": 1, "E28": 1, "E29": 1,
    "E30": 1, "E31": 1, "P0": 1,
}

LABNET_DEEPEST = ["S0", "E0", "E1", "E9", "E10", "E11", "E12", "E13", "S2", "E15", "E16", "E17"]
LABNET_FLAGS = {f"F{k}" for k in range(1, 12)}
