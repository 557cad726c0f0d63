"""
Steady-state hydraulics of a gravity-fed network, one demand period at a
time, and the feasibility check applied to every candidate solution.

The solver is the nodal Newton scheme of the global gradient algorithm:
unknown junction heads are solved from a symmetric positive definite system
built from inverse head-loss gradients, and pipe flows are then updated
from the new head differences. Flow signs are relative to each pipe's
reference orientation (node1 -> node2 as written in the instance file).
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import spsolve

from .config import SolverConfig
from .errors import ContractViolation, InstanceError
from .network import Network, PipeType, PipeTypeCatalog, Solution

logger = logging.getLogger(__name__)

# Hazen-Williams in SI units, diameter in meters; fixed so runs stay comparable
HW_COEFFICIENT = 10.6744
FLOW_EXPONENT = 1.852
DIAMETER_EXPONENT = 4.871
VELOCITY_COEFFICIENT = 1.27

# denominator floor of the relative flow-change test, m3/s
_FLOW_FLOOR = 1e-10

# -----------------------------------------------
# pipe formulas
# -----------------------------------------------
def resistance(length_m, diameter_m, roughness):
    return HW_COEFFICIENT * length_m / (roughness ** FLOW_EXPONENT * diameter_m ** DIAMETER_EXPONENT)


def headloss(q, length_m, t: PipeType):
    """Signed head loss (m) along the reference orientation; odd in q."""
    K = resistance(length_m, t.diameter_m, t.roughness)
    return np.sign(q) * K * np.abs(q) ** FLOW_EXPONENT


def headloss_gradient(q, length_m, t: PipeType, gradient_floor=SolverConfig.gradient_floor):
    K = resistance(length_m, t.diameter_m, t.roughness)
    return np.maximum(FLOW_EXPONENT * K * np.abs(q) ** (FLOW_EXPONENT - 1.0), gradient_floor)


def velocity(q, t: PipeType):
    return VELOCITY_COEFFICIENT * np.abs(q) / t.diameter_m ** 2

# -----------------------------------------------
# solver state
# -----------------------------------------------
@dataclass
class PeriodState:
    period: int
    heads: np.ndarray           # per node, in net.nodes order
    flows: np.ndarray           # per pipe, signed, in net.pipes order
    velocities: np.ndarray
    resistances: np.ndarray     # Hazen-Williams K per pipe for this solution
    converged: bool
    iterations_used: int
    network: Network = field(repr=False, compare=False)

    def head(self, node_id: str) -> float:
        return float(self.heads[self.network.node_position(node_id)])

    def flow(self, pipe_id: str) -> float:
        return float(self.flows[self.network.pipe_position(pipe_id)])

    def velocity(self, pipe_id: str) -> float:
        return float(self.velocities[self.network.pipe_position(pipe_id)])

    def pressure_head(self, node_id: str) -> float:
        return self.head(node_id) - self.network.node(node_id).elevation

    def headlosses(self) -> np.ndarray:
        return np.sign(self.flows) * self.resistances * np.abs(self.flows) ** FLOW_EXPONENT


@dataclass
class HydraulicState:
    per_period: list

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.per_period)


@dataclass(frozen=True)
class _Topology:
    start: np.ndarray           # node position of each pipe's node1
    end: np.ndarray
    junction_row: np.ndarray    # node position -> row of the junction system, -1 for reservoirs
    junctions: np.ndarray       # node positions of junctions
    fixed_heads: np.ndarray     # per node, nan for junctions
    elevations: np.ndarray


def _topology(net: Network) -> _Topology:
    cached = net.__dict__.get("_hydraulic_topology")
    if cached is not None:
        return cached
    n = len(net.nodes)
    start = np.array([net.node_position(p.endpoints[0]) for p in net.pipes], dtype=int)
    end = np.array([net.node_position(p.endpoints[1]) for p in net.pipes], dtype=int)
    is_junction = np.array([not node.is_reservoir for node in net.nodes], dtype=bool)
    junctions = np.flatnonzero(is_junction)
    junction_row = np.full(n, -1, dtype=int)
    junction_row[junctions] = np.arange(junctions.size)
    fixed = np.array([node.fixed_head if node.is_reservoir else np.nan for node in net.nodes],
                     dtype=float)
    elevations = np.array([node.elevation for node in net.nodes], dtype=float)
    topo = _Topology(start, end, junction_row, junctions, fixed, elevations)
    net.__dict__["_hydraulic_topology"] = topo
    return topo

# -----------------------------------------------
# simulation
# -----------------------------------------------
def simulate_period(net: Network, S: Solution, cat: PipeTypeCatalog, tau: int,
                    cfg: SolverConfig = SolverConfig()) -> PeriodState:
    dm = net.demand_model
    if not 1 <= tau <= dm.period_count:
        raise ContractViolation(f"period {tau} outside 1..{dm.period_count}")
    topo = _topology(net)
    types = S.types_array(net)
    if types.size and (types.min() < 1 or types.max() > len(cat)):
        raise ContractViolation(f"solution uses a type outside 1..{len(cat)}")

    diameters = cat.diameters_m[types - 1]
    K = resistance(net.pipe_lengths, diameters, cat.roughness[types - 1])
    demand = net.demand_matrix[tau - 1][topo.junctions]

    heads = np.where(np.isnan(topo.fixed_heads), 0.0, topo.fixed_heads)
    levels = topo.fixed_heads[~np.isnan(topo.fixed_heads)]
    if levels.size and not np.any(demand) and np.ptp(levels) == 0.0:
        # nothing drawn and one water level: the network stands still
        heads[topo.junctions] = levels[0]
        still = np.zeros(len(net.pipes))
        return PeriodState(period=tau, heads=heads, flows=still, velocities=still.copy(),
                           resistances=K, converged=True, iterations_used=0, network=net)
    q = cfg.init_velocity * np.pi * diameters ** 2 / 4.0

    row_s = topo.junction_row[topo.start]
    row_e = topo.junction_row[topo.end]
    js, je = row_s >= 0, row_e >= 0
    both = js & je
    fixed_s = np.where(js, 0.0, heads[topo.start])
    fixed_e = np.where(je, 0.0, heads[topo.end])
    nj = topo.junctions.size

    converged = False
    iterations = 0
    while iterations < cfg.max_iterations:
        iterations += 1
        abs_q = np.abs(q)
        grad = np.maximum(FLOW_EXPONENT * K * abs_q ** (FLOW_EXPONENT - 1.0), cfg.gradient_floor)
        loss = np.sign(q) * K * abs_q ** FLOW_EXPONENT
        c = 1.0 / grad
        y = q - loss / grad

        if nj:
            # inflow - outflow = demand, with q = y + c * (H1 - H2)
            rows = np.concatenate([row_s[js], row_e[je], row_s[both], row_e[both]])
            cols = np.concatenate([row_s[js], row_e[je], row_e[both], row_s[both]])
            data = np.concatenate([c[js], c[je], -c[both], -c[both]])
            A = sps.coo_matrix((data, (rows, cols)), shape=(nj, nj)).tocsc()
            b = -demand.copy()
            np.add.at(b, row_e[je], y[je] + c[je] * fixed_s[je])
            np.add.at(b, row_s[js], -y[js] + c[js] * fixed_e[js])
            solved = np.atleast_1d(spsolve(A, b))
            if not np.all(np.isfinite(solved)):
                raise InstanceError("singular junction system: a junction is cut off from every reservoir")
            heads[topo.junctions] = solved

        dH = heads[topo.start] - heads[topo.end]
        q_new = y + c * dH
        flow_change = np.abs(q_new - q).sum()
        flow_total = np.abs(q_new).sum()
        q = q_new

        residual = np.sign(q) * K * np.abs(q) ** FLOW_EXPONENT - dH
        max_residual = float(np.abs(residual).max()) if residual.size else 0.0
        if (flow_change <= cfg.flow_tolerance * max(flow_total, _FLOW_FLOOR)
                and max_residual <= cfg.head_tolerance):
            converged = True
            break

    if not converged:
        logger.debug("period %d did not converge after %d iterations", tau, iterations)
    velocities = VELOCITY_COEFFICIENT * np.abs(q) / diameters ** 2
    return PeriodState(period=tau, heads=heads, flows=q, velocities=velocities,
                       resistances=K, converged=converged, iterations_used=iterations,
                       network=net)


def simulate(net: Network, S: Solution, cat: PipeTypeCatalog,
             cfg: SolverConfig = SolverConfig()) -> HydraulicState:
    return HydraulicState([simulate_period(net, S, cat, tau, cfg)
                           for tau in net.demand_model.periods])


def energy_residuals(state: PeriodState) -> np.ndarray:
    """headloss(flow) - (head(node1) - head(node2)) for every pipe, in m."""
    topo = _topology(state.network)
    dH = state.heads[topo.start] - state.heads[topo.end]
    return state.headlosses() - dH


def loop_headloss_residual(state: PeriodState, cycle: list) -> float:
    """Sum of oriented head losses around a closed walk of (pipe id, +1/-1)."""
    from .graphkit import is_closed_walk

    if not is_closed_walk(state.network, cycle):
        raise ContractViolation("cycle is not a closed walk")
    losses = state.headlosses()
    return float(sum(sign * losses[state.network.pipe_position(pid)] for pid, sign in cycle))

# -----------------------------------------------
# feasibility
# -----------------------------------------------
@dataclass(frozen=True)
class Violation:
    period: int
    element: Optional[str]  # junction or pipe id, None for non-convergence
    kind: str               # "convergence" | "pressure" | "velocity"
    value: float = float("nan")
    limit: float = float("nan")


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    violation: Optional[Violation] = None

    def __bool__(self):
        return self.feasible


class SimulationCounter:
    """Run-wide counters; safe to bump from several threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self.simulator_calls = 0
        self.validations = 0
        self.feasible = 0

    def add_call(self):
        with self._lock:
            self.simulator_calls += 1

    def add_validation(self, feasible: bool):
        with self._lock:
            self.validations += 1
            if feasible:
                self.feasible += 1


def validate(net: Network, S: Solution, cat: PipeTypeCatalog, cfg: SolverConfig,
             h_min: float, v_max: float, counter: Optional[SimulationCounter] = None) -> Verdict:
    topo = _topology(net)
    for tau in net.demand_model.periods:
        state = simulate_period(net, S, cat, tau, cfg)
        if counter is not None:
            counter.add_call()
        if not state.converged:
            return Verdict(False, Violation(tau, None, "convergence"))

        pressure = state.heads[topo.junctions] - topo.elevations[topo.junctions]
        low = np.flatnonzero(pressure < h_min)
        if low.size:
            node = net.nodes[topo.junctions[low[0]]]
            return Verdict(False, Violation(tau, node.id, "pressure",
                                            float(pressure[low[0]]), h_min))

        fast = np.flatnonzero(state.velocities > v_max)
        if fast.size:
            pipe = net.pipes[fast[0]]
            return Verdict(False, Violation(tau, pipe.id, "velocity",
                                            float(state.velocities[fast[0]]), v_max))
    return Verdict(True)


@dataclass
class SolutionValidator:
    """validate() bound to one instance; the callable the search procedures use."""
    net: Network
    cat: PipeTypeCatalog
    h_min: float
    v_max: float
    cfg: SolverConfig = SolverConfig()
    counter: SimulationCounter = field(default_factory=SimulationCounter)

    def __call__(self, S: Solution) -> Verdict:
        verdict = validate(self.net, S, self.cat, self.cfg, self.h_min, self.v_max, self.counter)
        self.counter.add_validation(verdict.feasible)
        if not verdict:
            logger.debug("infeasible: %s", verdict.violation)
        return verdict
