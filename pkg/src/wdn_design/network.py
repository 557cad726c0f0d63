"""
Network model: pipe-type catalog, nodes and pipes, the demand horizon and
pipe-type assignments (solutions), together with cost and demand accessors.

Nodes and pipes are kept in natural id order ("P2" before "P10"); that
order is what "pipe id order" means everywhere else in the package.
"""

import logging
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .config import DEFAULT_PERIOD_COUNT
from .errors import CatalogError, ContractViolation, InstanceError

logger = logging.getLogger(__name__)


def natural_key(label: str):
    """Sort key comparing digit runs numerically."""
    return tuple((0, int(part), "") if part.isdigit() else (1, 0, part)
                 for part in re.split(r"(\d+)", label) if part)

# -----------------------------------------------
# pipe types
# -----------------------------------------------
@dataclass(frozen=True)
class PipeType:
    index: int          # 1-based ordinal in the catalog
    diameter_mm: float
    roughness: float    # Hazen-Williams coefficient
    unit_cost: float    # money per meter

    def __post_init__(self):
        if self.diameter_mm <= 0 or self.roughness <= 0 or self.unit_cost <= 0:
            raise CatalogError(f"pipe type {self.index}: diameter, roughness "
                               "and unit cost must be positive")

    @property
    def diameter_m(self) -> float:
        return self.diameter_mm / 1000.0


@dataclass(frozen=True)
class PipeTypeCatalog:
    types: tuple

    def __post_init__(self):
        types = tuple(self.types)
        object.__setattr__(self, "types", types)
        if not types:
            raise CatalogError("catalog is empty")
        for position, t in enumerate(types, start=1):
            if t.index != position:
                raise CatalogError(f"type index {t.index} found at position {position}")
        for prev, cur in zip(types, types[1:]):
            if cur.diameter_mm < prev.diameter_mm:
                raise CatalogError(f"diameters not sorted: type {cur.index} "
                                   f"({cur.diameter_mm} mm) after {prev.diameter_mm} mm")
            if cur.unit_cost < prev.unit_cost:
                raise CatalogError(f"unit costs not sorted: type {cur.index} "
                                   f"({cur.unit_cost}) after {prev.unit_cost}")

    def __len__(self):
        return len(self.types)

    def __iter__(self):
        return iter(self.types)

    def type(self, t: int) -> PipeType:
        if not 1 <= t <= len(self.types):
            raise ContractViolation(f"type index {t} outside 1..{len(self.types)}")
        return self.types[t - 1]

    @property
    def largest(self) -> int:
        return len(self.types)

    # arrays indexed by type - 1, used by the vectorized hydraulics
    @cached_property
    def diameters_m(self) -> np.ndarray:
        return np.array([t.diameter_m for t in self.types])

    @cached_property
    def roughness(self) -> np.ndarray:
        return np.array([t.roughness for t in self.types], dtype=float)

    @cached_property
    def unit_costs(self) -> np.ndarray:
        return np.array([t.unit_cost for t in self.types], dtype=float)

# -----------------------------------------------
# nodes, pipes, demands
# -----------------------------------------------
class NodeKind(str, Enum):
    JUNCTION = "junction"
    RESERVOIR = "reservoir"


class Demand(NamedTuple):
    base_load: float    # m3/s
    pattern_id: Optional[str] = None


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    elevation: float
    fixed_head: Optional[float] = None
    demands: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", NodeKind(self.kind))
        object.__setattr__(self, "demands", tuple(Demand(*d) for d in self.demands))
        if self.kind is NodeKind.RESERVOIR:
            if self.fixed_head is None:
                raise InstanceError(f"reservoir {self.id} has no fixed head")
            if self.demands:
                raise InstanceError(f"reservoir {self.id} cannot carry demands")
        elif self.fixed_head is not None:
            raise InstanceError(f"junction {self.id} cannot have a fixed head")
        for d in self.demands:
            if d.base_load < 0:
                raise InstanceError(f"junction {self.id} has a negative base load")

    @property
    def is_reservoir(self) -> bool:
        return self.kind is NodeKind.RESERVOIR


@dataclass(frozen=True)
class Pipe:
    id: str
    endpoints: tuple
    length_m: float

    def __post_init__(self):
        object.__setattr__(self, "endpoints", tuple(self.endpoints))
        if self.length_m <= 0:
            raise InstanceError(f"pipe {self.id} has nonpositive length")
        if len(self.endpoints) != 2 or self.endpoints[0] == self.endpoints[1]:
            raise InstanceError(f"pipe {self.id} needs two distinct endpoints")


@dataclass(frozen=True)
class DemandModel:
    patterns: Mapping = field(default_factory=dict)
    period_count: int = DEFAULT_PERIOD_COUNT
    default_pattern: Optional[str] = None
    demand_multiplier: float = 1.0

    def __post_init__(self):
        patterns = {pid: tuple(float(v) for v in values)
                    for pid, values in dict(self.patterns).items()}
        object.__setattr__(self, "patterns", patterns)
        if self.period_count < 1:
            raise InstanceError("period_count must be at least 1")
        for pid, values in patterns.items():
            if not values:
                raise InstanceError(f"pattern {pid} is empty")
            if min(values) < 0:
                raise InstanceError(f"pattern {pid} has a negative multiplier")
        if self.demand_multiplier < 0:
            raise InstanceError("demand multiplier must be nonnegative")

    def multiplier(self, pattern_id: Optional[str], tau: int) -> float:
        if pattern_id is None:
            pattern_id = self.default_pattern
            if pattern_id not in self.patterns:
                return 1.0
        try:
            values = self.patterns[pattern_id]
        except KeyError:
            raise InstanceError(f"unknown pattern {pattern_id!r}") from None
        # shorter patterns wrap around the horizon
        return values[(tau - 1) % len(values)]

    @property
    def periods(self) -> range:
        return range(1, self.period_count + 1)


@dataclass(frozen=True, eq=False)
class Network:
    nodes: tuple
    pipes: tuple
    demand_model: DemandModel = field(default_factory=DemandModel)
    title: str = ""

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes, key=lambda n: natural_key(n.id)))
        pipes = tuple(sorted(self.pipes, key=lambda p: natural_key(p.id)))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "pipes", pipes)

        node_index = {}
        for i, node in enumerate(nodes):
            if node.id in node_index:
                raise InstanceError(f"duplicate node id {node.id!r}")
            node_index[node.id] = i
        pipe_index = {}
        for i, pipe in enumerate(pipes):
            if pipe.id in pipe_index:
                raise InstanceError(f"duplicate pipe id {pipe.id!r}")
            for end in pipe.endpoints:
                if end not in node_index:
                    raise InstanceError(f"pipe {pipe.id} references unknown node {end!r}")
            pipe_index[pipe.id] = i
        object.__setattr__(self, "_node_index", node_index)
        object.__setattr__(self, "_pipe_index", pipe_index)

        if nodes:
            if not any(n.is_reservoir for n in nodes):
                raise InstanceError("network has no reservoir")
            from .graphkit import network_graph
            import networkx as nx
            if not nx.is_connected(network_graph(self)):
                raise InstanceError("network is not connected")

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (self.nodes, self.pipes, self.demand_model) == \
            (other.nodes, other.pipes, other.demand_model)

    def __repr__(self):
        return (f"Network(title={self.title!r}, nodes={len(self.nodes)}, "
                f"pipes={len(self.pipes)}, periods={self.demand_model.period_count})")

    def node(self, node_id: str) -> Node:
        return self.nodes[self._node_index[node_id]]

    def pipe(self, pipe_id: str) -> Pipe:
        return self.pipes[self._pipe_index[pipe_id]]

    def node_position(self, node_id: str) -> int:
        return self._node_index[node_id]

    def pipe_position(self, pipe_id: str) -> int:
        return self._pipe_index[pipe_id]

    @property
    def pipe_ids(self) -> tuple:
        return tuple(p.id for p in self.pipes)

    @property
    def junctions(self) -> tuple:
        return tuple(n for n in self.nodes if not n.is_reservoir)

    @property
    def reservoirs(self) -> tuple:
        return tuple(n for n in self.nodes if n.is_reservoir)

    @cached_property
    def pipe_lengths(self) -> np.ndarray:
        return np.array([p.length_m for p in self.pipes], dtype=float)

    @cached_property
    def demand_matrix(self) -> np.ndarray:
        """Demands in m3/s, shape (periods, nodes); zero for reservoirs."""
        dm = self.demand_model
        out = np.zeros((dm.period_count, len(self.nodes)))
        for i, node in enumerate(self.nodes):
            if node.demands:
                for tau in dm.periods:
                    out[tau - 1, i] = demand_at(node, tau, dm)
        return out

# -----------------------------------------------
# solutions
# -----------------------------------------------
class Solution(Mapping):
    """Assignment of one catalog type index to every pipe (pipe id -> t)."""

    __slots__ = ("_assignment",)

    def __init__(self, assignment):
        self._assignment = dict(assignment)

    @classmethod
    def uniform(cls, pipe_ids: Iterable[str], t: int) -> "Solution":
        return cls({pid: t for pid in pipe_ids})

    def __getitem__(self, pipe_id):
        return self._assignment[pipe_id]

    def __iter__(self):
        return iter(self._assignment)

    def __len__(self):
        return len(self._assignment)

    def __repr__(self):
        return f"Solution({self._assignment!r})"

    def with_types(self, changes: Mapping) -> "Solution":
        new = dict(self._assignment)
        new.update(changes)
        return Solution(new)

    def incremented(self, pipe_ids: Iterable[str], max_type: int) -> "Solution":
        """One type larger on each given pipe, clamped at the largest type."""
        return self.with_types({pid: min(self._assignment[pid] + 1, max_type)
                                for pid in pipe_ids})

    def types_array(self, net: Network) -> np.ndarray:
        """Type indices aligned with net.pipes; checks totality."""
        try:
            return np.array([self._assignment[p.id] for p in net.pipes], dtype=int)
        except KeyError as exc:
            raise ContractViolation(f"solution has no type for pipe {exc.args[0]!r}") from None

# -----------------------------------------------
# cost and demand accessors
# -----------------------------------------------
def _checked_types(S: Solution, net: Network, cat: PipeTypeCatalog) -> np.ndarray:
    types = S.types_array(net)
    if types.size and (types.min() < 1 or types.max() > len(cat)):
        raise ContractViolation(f"solution uses a type outside 1..{len(cat)}")
    return types


def solution_cost(S: Solution, net: Network, cat: PipeTypeCatalog) -> float:
    types = _checked_types(S, net, cat)
    if not types.size:
        return 0.0
    return float(np.dot(cat.unit_costs[types - 1], net.pipe_lengths))


def pipe_cost(S: Solution, pipe: Pipe, cat: PipeTypeCatalog) -> float:
    return cat.type(S[pipe.id]).unit_cost * pipe.length_m


def demand_at(node: Node, tau: int, dm: DemandModel) -> float:
    if not 1 <= tau <= dm.period_count:
        raise ContractViolation(f"period {tau} outside 1..{dm.period_count}")
    if node.is_reservoir:
        return 0.0
    return dm.demand_multiplier * sum(d.base_load * dm.multiplier(d.pattern_id, tau)
                                      for d in node.demands)


def base_demand(node: Node, dm: DemandModel) -> float:
    """Smallest demand of a junction over the horizon."""
    if node.is_reservoir:
        raise ContractViolation(f"{node.id} is a reservoir, base demand is defined for junctions")
    return min(demand_at(node, tau, dm) for tau in dm.periods)


def total_demand(net: Network, tau: int) -> float:
    return sum(demand_at(n, tau, net.demand_model) for n in net.junctions)


def meshedness(net: Network) -> float:
    from .graphkit import cycle_space_dim

    denominator = 2 * len(net.nodes) - 5
    if denominator <= 0:
        raise ContractViolation("meshedness needs at least 3 nodes")
    return cycle_space_dim(net) / denominator
