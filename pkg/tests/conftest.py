"""Small in-memory networks shared by the test modules."""

import numpy as np
import pytest

from wdn_design.hydraulics import HW_COEFFICIENT, FLOW_EXPONENT, DIAMETER_EXPONENT, Verdict
from wdn_design.network import (DemandModel, Network, Node, NodeKind, Pipe, PipeType,
                                PipeTypeCatalog)

# 24 hourly multipliers, peak at hour 12
DAY_PATTERN = tuple(0.6 + 0.8 * np.sin(np.pi * h / 24) for h in range(24))


def day_model(**kw):
    return DemandModel({"day": DAY_PATTERN}, 24, **kw)


def reservoir(node_id, head):
    return Node(node_id, NodeKind.RESERVOIR, head, fixed_head=head)


def junction(node_id, demand=0.0, elevation=0.0, pattern=None):
    demands = ((demand, pattern),) if demand else ()
    return Node(node_id, NodeKind.JUNCTION, elevation, demands=demands)


def path_network(lengths, demands, head=50.0, elevations=None, dm=None, pattern=None):
    """R - J1 - J2 - ..., pipe Pk joins node k-1 to node k."""
    elevations = elevations or [0.0] * len(demands)
    nodes = [reservoir("R", head)]
    nodes += [junction(f"J{k}", d, e, pattern)
              for k, (d, e) in enumerate(zip(demands, elevations), start=1)]
    names = ["R"] + [f"J{k}" for k in range(1, len(demands) + 1)]
    pipes = [Pipe(f"P{k}", (names[k - 1], names[k]), length)
             for k, length in enumerate(lengths, start=1)]
    return Network(tuple(nodes), tuple(pipes), dm or DemandModel())


def reservoir_star(lengths, demands, head=50.0, dm=None, pattern=None):
    """Every junction Jk hangs off the reservoir through its own pipe Pk."""
    nodes = [reservoir("R", head)]
    nodes += [junction(f"J{k}", d, pattern=pattern) for k, d in enumerate(demands, start=1)]
    pipes = [Pipe(f"P{k}", ("R", f"J{k}"), length) for k, length in enumerate(lengths, start=1)]
    return Network(tuple(nodes), tuple(pipes), dm or DemandModel())


def build(nodes, pipe_rows, dm=None):
    """pipe_rows: (id, node1, node2, length)."""
    pipes = [Pipe(pid, (a, b), length) for pid, a, b, length in pipe_rows]
    return Network(tuple(nodes), tuple(pipes), dm or DemandModel())


def small_catalog():
    return PipeTypeCatalog((PipeType(1, 100, 130, 10),
                            PipeType(2, 150, 130, 20),
                            PipeType(3, 200, 130, 40)))


def resistance_of(length_m, diameter_mm, roughness=130):
    d = diameter_mm / 1000.0
    return HW_COEFFICIENT * length_m / (roughness ** FLOW_EXPONENT * d ** DIAMETER_EXPONENT)


class StubValidator:
    """Feasibility from a predicate; records every solution it is asked about."""

    def __init__(self, feasible=lambda S: True):
        self.feasible = feasible
        self.calls = []

    def __call__(self, S):
        self.calls.append(S)
        return Verdict(bool(self.feasible(S)))


@pytest.fixture
def catalog3():
    return small_catalog()


@pytest.fixture
def loop_networks():
    """Looped, branched and multi-reservoir fixtures with 24-period demands."""
    dm = day_model()
    p = "day"
    nets = {}
    nets["triangle"] = build(
        [reservoir("R", 60), junction("A", 0.010, 5, p), junction("B", 0.015, 3, p)],
        [("P1", "R", "A", 400), ("P2", "A", "B", 300), ("P3", "R", "B", 500)], dm)
    nets["square"] = build(
        [reservoir("R", 70), junction("A", 0.008, 0, p), junction("B", 0.012, 2, p),
         junction("C", 0.006, 1, p)],
        [("P1", "R", "A", 300), ("P2", "A", "B", 400), ("P3", "B", "C", 350),
         ("P4", "C", "R", 450)], dm)
    nets["grid"] = build(
        [reservoir("R", 80)] + [junction(n, d, 0, p) for n, d in
                                (("A", 0.004), ("B", 0.006), ("C", 0.003),
                                 ("D", 0.005), ("E", 0.007))],
        [("P1", "R", "A", 200), ("P2", "A", "B", 200), ("P3", "R", "C", 200),
         ("P4", "C", "D", 200), ("P5", "D", "E", 200), ("P6", "A", "D", 250),
         ("P7", "B", "E", 250)], dm)
    nets["two_reservoirs"] = build(
        [reservoir("R1", 55), reservoir("R2", 52), junction("A", 0.010, 0, p),
         junction("B", 0.005, 0, p)],
        [("P1", "R1", "A", 600), ("P2", "A", "B", 300), ("P3", "B", "R2", 500)], dm)
    nets["parallel"] = build(
        [reservoir("R", 50), junction("A", 0.012, 0, p), junction("B", 0.004, 0, p)],
        [("P1", "R", "A", 800), ("P2", "R", "A", 800), ("P3", "A", "B", 300)], dm)
    nets["branched"] = build(
        [reservoir("R", 50), junction("A", 0.003, 0, p), junction("B", 0.004, 1, p),
         junction("C", 0.002, 2, p), junction("D", 0.0, 0, p)],
        [("P1", "R", "A", 500), ("P2", "A", "B", 300), ("P3", "A", "C", 200),
         ("P4", "C", "D", 100)], dm)
    nets["path"] = path_network([300, 200, 150], [0.004, 0.003, 0.002], 50, dm=dm, pattern=p)
    nets["star"] = reservoir_star([100, 200, 300], [0.002, 0.0, 0.005], 40, dm=dm, pattern=p)
    nets["theta"] = build(
        [reservoir("R", 65), junction("A", 0.005, 0, p), junction("B", 0.009, 0, p),
         junction("C", 0.004, 0, p)],
        [("P1", "R", "A", 300), ("P2", "A", "B", 300), ("P3", "B", "C", 300),
         ("P4", "C", "A", 400), ("P5", "R", "C", 700), ("P6", "A", "B", 500)], dm)
    nets["loop_two_sources"] = build(
        [reservoir("R1", 60), reservoir("R2", 58), junction("A", 0.007, 0, p),
         junction("B", 0.007, 0, p), junction("C", 0.003, 0, p)],
        [("P1", "R1", "A", 400), ("P2", "A", "B", 300), ("P3", "B", "R2", 400),
         ("P4", "A", "C", 200), ("P5", "C", "B", 200)], dm)
    return nets


# three pipes in series, one period; cheapest feasible design is not uniform
TIGHT_INP = """\
[TITLE]
tight series

[JUNCTIONS]
;ID  Elev  Demand  Pattern
J1   0     8       1
J2   0     8       1
J3   0     8       1

[RESERVOIRS]
R    28.5

[PIPES]
P1   R    J1   500
P2   J1   J2   400
P3   J2   J3   300

[PATTERNS]
1    1.0

[OPTIONS]
Units  LPS

[END]
"""

CATALOG3_CSV = "index,diameter_mm,roughness,unit_cost\n1,100,130,10\n2,150,130,20\n3,200,130,40\n"


@pytest.fixture
def instance_files(tmp_path):
    """(instance path, catalog path) written under tmp_path."""
    inp = tmp_path / "tight.inp"
    inp.write_text(TIGHT_INP)
    cat = tmp_path / "small.csv"
    cat.write_text(CATALOG3_CSV)
    return inp, cat
