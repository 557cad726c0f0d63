import pytest

from conftest import build, junction, path_network, reservoir
from wdn_design.data_io import default_catalog
from wdn_design.errors import CatalogError, ContractViolation, InstanceError
from wdn_design.network import (Demand, DemandModel, Network, Node, NodeKind, Pipe, PipeType,
                                PipeTypeCatalog, Solution, base_demand, demand_at, meshedness,
                                natural_key, pipe_cost, solution_cost, total_demand)


class TestPipeTypeCatalog:
    def test_default_catalog_keeps_duplicate_rows(self):
        cat = default_catalog()
        assert len(cat) == 16
        assert cat.type(12) == PipeType(12, 400, 130, 290)
        assert (cat.type(13).diameter_mm, cat.type(13).unit_cost) == (400, 290)

    def test_unsorted_diameters_rejected(self):
        with pytest.raises(CatalogError):
            PipeTypeCatalog((PipeType(1, 100, 130, 10), PipeType(2, 50, 130, 20)))

    def test_unsorted_costs_rejected(self):
        with pytest.raises(CatalogError):
            PipeTypeCatalog((PipeType(1, 100, 130, 10), PipeType(2, 150, 130, 5)))

    def test_empty_and_nonpositive(self):
        with pytest.raises(CatalogError):
            PipeTypeCatalog(())
        with pytest.raises(CatalogError):
            PipeType(1, 0, 130, 10)

    def test_type_lookup_is_one_based(self):
        cat = default_catalog()
        assert cat.type(1).diameter_mm == 20
        assert cat.type(16).unit_cost == 628
        with pytest.raises(ContractViolation):
            cat.type(0)
        with pytest.raises(ContractViolation):
            cat.type(17)


class TestSolutionCost:
    def test_single_pipe(self):
        net = path_network([1000], [0.0])
        assert solution_cost(Solution({"P1": 8}), net, default_catalog()) == 61000

    def test_empty_network(self):
        net = Network((), ())
        assert solution_cost(Solution({}), net, default_catalog()) == 0

    def test_two_pipes(self):
        net = path_network([100, 200], [0.0, 0.0])
        assert solution_cost(Solution({"P1": 1, "P2": 2}), net, default_catalog()) == 4900

    def test_missing_pipe_is_contract_violation(self):
        net = path_network([100, 200], [0.0, 0.0])
        with pytest.raises(ContractViolation):
            solution_cost(Solution({"P1": 1}), net, default_catalog())

    def test_larger_type_never_cheaper(self):
        net = path_network([100, 250, 75], [0.0, 0.0, 0.0])
        cat = default_catalog()
        S = Solution.uniform(net.pipe_ids, 5)
        base = solution_cost(S, net, cat)
        for pid in net.pipe_ids:
            for t in range(6, 17):
                assert solution_cost(S.with_types({pid: t}), net, cat) >= base

    def test_pipe_cost(self):
        net = path_network([250], [0.0])
        assert pipe_cost(Solution({"P1": 3}), net.pipe("P1"), default_catalog()) == 25 * 250


class TestDemand:
    def test_no_categories(self):
        dm = DemandModel()
        assert all(demand_at(junction("J"), tau, dm) == 0 for tau in dm.periods)

    def test_pattern_multiplier(self):
        dm = DemandModel({"1": (1.0, 0.5)}, period_count=2)
        assert demand_at(junction("J", 0.002, pattern="1"), 2, dm) == pytest.approx(0.001)

    def test_reservoir_has_no_demand(self):
        dm = DemandModel()
        assert demand_at(reservoir("R", 40), 5, dm) == 0

    def test_short_pattern_wraps(self):
        dm = DemandModel({"1": (1.0, 0.5)}, period_count=24)
        j = junction("J", 0.004, pattern="1")
        assert demand_at(j, 3, dm) == pytest.approx(0.004)
        assert demand_at(j, 24, dm) == pytest.approx(0.002)

    def test_unknown_pattern(self):
        dm = DemandModel()
        with pytest.raises(InstanceError):
            demand_at(junction("J", 0.001, pattern="missing"), 1, dm)

    def test_period_out_of_range(self):
        with pytest.raises(ContractViolation):
            demand_at(junction("J", 0.001), 25, DemandModel())

    def test_default_pattern_and_multiplier(self):
        dm = DemandModel({"base": (2.0,)}, 1, default_pattern="base", demand_multiplier=1.5)
        assert demand_at(junction("J", 0.001), 1, dm) == pytest.approx(0.003)

    def test_categories_add_up(self):
        dm = DemandModel({"a": (1.0,), "b": (0.5,)}, 1)
        node = Node("J", NodeKind.JUNCTION, 0.0, demands=(Demand(0.002, "a"), Demand(0.004, "b")))
        assert demand_at(node, 1, dm) == pytest.approx(0.004)

    def test_base_demand_constant(self):
        assert base_demand(junction("J", 0.003), DemandModel()) == pytest.approx(0.003)

    def test_base_demand_is_minimum(self):
        dm = DemandModel({"1": (1.0, 0.2, 0.8)}, period_count=3)
        j = junction("J", 0.01, pattern="1")
        assert base_demand(j, dm) == pytest.approx(0.002)
        assert all(base_demand(j, dm) <= demand_at(j, tau, dm) for tau in dm.periods)

    def test_base_demand_zero(self):
        assert base_demand(junction("J"), DemandModel()) == 0

    def test_base_demand_of_reservoir(self):
        with pytest.raises(ContractViolation):
            base_demand(reservoir("R", 10), DemandModel())

    def test_total_demand(self):
        net = path_network([10, 10], [0.001, 0.002])
        assert total_demand(net, 1) == pytest.approx(0.003)


class TestMeshedness:
    def test_tree(self):
        net = path_network([10] * 9, [0.0] * 9)
        assert meshedness(net) == 0

    def test_single_cycle(self):
        nodes = [reservoir("R", 10)] + [junction(n) for n in "ABCD"]
        ring = ["R", "A", "B", "C", "D", "R"]
        rows = [(f"P{k}", a, b, 10) for k, (a, b) in enumerate(zip(ring, ring[1:]), start=1)]
        assert meshedness(build(nodes, rows)) == pytest.approx(0.2)

    def test_hundred_pipes_seventy_four_nodes(self):
        net = path_network([10] * 73, [0.0] * 73)
        chords = [Pipe(f"C{k}", ("R", f"J{k + 2}"), 10) for k in range(27)]
        net = Network(net.nodes, net.pipes + tuple(chords))
        assert meshedness(net) == pytest.approx(27 / 143)

    def test_too_small(self):
        net = path_network([10], [0.0])
        with pytest.raises(ContractViolation):
            meshedness(net)


class TestNetworkInvariants:
    def test_pipe_to_unknown_node(self):
        with pytest.raises(InstanceError, match="X"):
            build([reservoir("R", 10)], [("P1", "R", "X", 10)])

    def test_no_reservoir(self):
        with pytest.raises(InstanceError):
            build([junction("A"), junction("B")], [("P1", "A", "B", 10)])

    def test_disconnected(self):
        with pytest.raises(InstanceError):
            build([reservoir("R", 10), junction("A"), junction("B")], [("P1", "R", "A", 10)])

    def test_nonpositive_length(self):
        with pytest.raises(InstanceError):
            Pipe("P1", ("A", "B"), 0)

    def test_reservoir_with_demand(self):
        with pytest.raises(InstanceError):
            Node("R", NodeKind.RESERVOIR, 10, fixed_head=10, demands=((0.1, None),))

    def test_natural_id_order(self):
        net = path_network([1] * 11, [0.0] * 11)
        assert net.pipe_ids[:3] == ("P1", "P2", "P3")
        assert net.pipe_ids[-2:] == ("P10", "P11")
        assert natural_key("P9") < natural_key("P10")


class TestSolution:
    def test_incremented_clamps(self):
        S = Solution({"P1": 3, "P2": 16})
        assert dict(S.incremented(["P1", "P2"], 16)) == {"P1": 4, "P2": 16}

    def test_value_semantics(self):
        S = Solution.uniform(["P1", "P2"], 4)
        T = S.with_types({"P1": 2})
        assert S == Solution({"P1": 4, "P2": 4})
        assert T["P1"] == 2 and S["P1"] == 4
