"""
Graph utilities over the pipe network: the shortest path tree grown from
the reservoirs, the protected Path-List, BFS distance levels around a pipe
and the cycle space.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import networkx as nx

from .errors import ContractViolation, InstanceError
from .network import Network, base_demand

logger = logging.getLogger(__name__)


def network_graph(net: Network) -> nx.MultiGraph:
    """Undirected multigraph, one edge per pipe keyed by pipe id."""
    G = nx.MultiGraph()
    G.add_nodes_from(n.id for n in net.nodes)
    for pipe in net.pipes:
        u, v = pipe.endpoints
        G.add_edge(u, v, key=pipe.id, length=pipe.length_m)
    return G

# -----------------------------------------------
# shortest path tree
# -----------------------------------------------
@dataclass(frozen=True)
class SptResult:
    dist: dict          # node id -> length-weighted distance to nearest reservoir
    parent_pipe: dict   # node id -> pipe id, None for reservoirs


def shortest_path_tree(net: Network) -> SptResult:
    G = network_graph(net)
    sources = [n.id for n in net.reservoirs]
    if not sources:
        raise InstanceError("shortest path tree needs at least one reservoir")
    dist = nx.multi_source_dijkstra_path_length(G, sources, weight="length")
    unreachable = [n.id for n in net.nodes if n.id not in dist]
    if unreachable:
        raise InstanceError(f"nodes unreachable from every reservoir: {unreachable}")

    incident = {n.id: [] for n in net.nodes}
    for pipe in net.pipes:
        for end in pipe.endpoints:
            incident[end].append(pipe)

    parent = {}
    for node in net.nodes:
        if node.is_reservoir:
            parent[node.id] = None
            continue
        # pipes arrive in id order, so the first tight pipe is the smallest id
        best = None
        for pipe in incident[node.id]:
            u, v = pipe.endpoints
            other = v if u == node.id else u
            if dist[other] >= dist[node.id]:
                continue
            if math.isclose(dist[other] + pipe.length_m, dist[node.id],
                            rel_tol=1e-12, abs_tol=1e-9):
                best = pipe.id
                break
        if best is None:
            raise InstanceError(f"no tight parent pipe for node {node.id}")
        parent[node.id] = best
    return SptResult(dist=dict(dist), parent_pipe=parent)


def spt_path(net: Network, spt: SptResult, node_id: str) -> list:
    """Pipe ids from node_id back to its reservoir along the tree."""
    path = []
    current = node_id
    while spt.parent_pipe[current] is not None:
        pipe_id = spt.parent_pipe[current]
        path.append(pipe_id)
        u, v = net.pipe(pipe_id).endpoints
        current = u if v == current else v
    return path


def path_list(net: Network, spt: SptResult, alpha: float) -> frozenset:
    """Pipes on tree paths from the highest base-demand junctions to their reservoirs."""
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation("alpha must lie in [0, 1]")
    junctions = net.junctions
    if not junctions:
        return frozenset()
    demands = {n.id: base_demand(n, net.demand_model) for n in junctions}
    d_max = max(demands.values())
    d_min = min(demands.values())
    threshold = d_max - alpha * (d_max - d_min)

    protected = set()
    for node_id, d in demands.items():
        if d >= threshold:
            protected.update(spt_path(net, spt, node_id))
    logger.debug("path list: %d pipes from %d junctions",
                 len(protected), sum(d >= threshold for d in demands.values()))
    return frozenset(protected)

# -----------------------------------------------
# BFS distance levels
# -----------------------------------------------
@dataclass(frozen=True)
class LevelMap:
    w: dict     # pipe id -> level k >= 1

    def level_sets(self, pipe_ids: Iterable[str]) -> list:
        """(level, pipes) pairs in increasing level, pipes in the given order."""
        groups = {}
        for pid in pipe_ids:
            groups.setdefault(self.w[pid], []).append(pid)
        return sorted(groups.items())


def bfs_levels(net: Network, seed_nodes: Iterable[str]) -> LevelMap:
    G = network_graph(net)
    seeds = list(dict.fromkeys(seed_nodes))
    for s in seeds:
        if s not in G:
            raise ContractViolation(f"unknown seed node {s!r}")
    depth = {}
    for k, layer in enumerate(nx.bfs_layers(G, seeds)):
        for node_id in layer:
            depth[node_id] = k
    levels = {}
    for pipe in net.pipes:
        u, v = pipe.endpoints
        levels[pipe.id] = 1 + min(depth[u], depth[v])
    return LevelMap(w=levels)

# -----------------------------------------------
# cycle space
# -----------------------------------------------
def cycle_space_dim(net: Network) -> int:
    G = network_graph(net)
    if G.number_of_nodes() == 0:
        return 0
    return G.number_of_edges() - G.number_of_nodes() + nx.number_connected_components(G)


def fundamental_cycles(net: Network) -> list:
    """Oriented cycle basis: each cycle is a list of (pipe id, +1 | -1).

    +1 means the walk follows the pipe's reference orientation node1 -> node2.
    """
    cycles = []
    G = network_graph(net)
    tree = nx.minimum_spanning_tree(G, weight="length")
    tree_keys = {k for _, _, k in tree.edges(keys=True)}
    simple_tree = nx.Graph()
    simple_tree.add_nodes_from(G.nodes)
    for u, v, k in tree.edges(keys=True):
        simple_tree.add_edge(u, v, key=k)

    for pipe in net.pipes:
        if pipe.id in tree_keys:
            continue
        u, v = pipe.endpoints
        # close the walk u -> v over the pipe, then v -> u through the tree
        walk = [(pipe.id, 1)]
        nodes = nx.shortest_path(simple_tree, v, u)
        for a, b in zip(nodes, nodes[1:]):
            key = simple_tree.edges[a, b]["key"]
            start, _ = net.pipe(key).endpoints
            walk.append((key, 1 if start == a else -1))
        cycles.append(walk)
    return cycles


def is_closed_walk(net: Network, cycle: list) -> bool:
    if not cycle:
        return False
    position: Optional[str] = None
    first = None
    for pipe_id, sign in cycle:
        a, b = net.pipe(pipe_id).endpoints
        start, end = (a, b) if sign > 0 else (b, a)
        if position is None:
            first = start
        elif position != start:
            return False
        position = end
    return position == first
