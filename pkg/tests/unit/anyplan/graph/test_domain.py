"""
Unit tests for the anyplan.graph.domain module.
"""
# pylint: disable=no-self-use
import io
import math

import numpy as np
import pytest

from anyplan.graph.domain import (
    PlanGraph,
    default_gamma,
    neighborhood_radius,
    unit_ball_volume,
)
from anyplan.space.domain import ContractViolation, PathSolution, SpaceBounds, as_config
from anyplan.world.domain import Scenario, WorldGeometry, WorldKind
from tests.oracles import (
    dijkstra_costs,
    random_graph,
    random_valid_path,
    tree_violations,
)


@pytest.fixture(name="open_scenario")
def fixture_open_scenario():
    return Scenario(
        name="open",
        space=SpaceBounds((-5.0, -5.0), (5.0, 5.0)),
        world=WorldGeometry(WorldKind.POINT2D),
        start=(0.0, 0.0),
        goals=((4.0, 4.0),),
        resolution=0.05,
    )


@pytest.fixture(name="use_kdtree", params=[False, True], ids=["linear", "kdtree"])
def fixture_use_kdtree(request):
    return request.param


def chain_graph(*configs, max_radius=1.5):
    """
    A graph holding a single branch through configs, the first being the
    root. The huge gamma leaves the neighbourhood radius at max_radius.
    """
    graph = PlanGraph([as_config(configs[0])], gamma=1e6, max_radius=max_radius)
    for k, config in enumerate(configs[1:]):
        graph.add_vertex(as_config(config), k)
    return graph


class TestRadius:
    def test_unit_ball_volume(self):
        assert unit_ball_volume(2) == pytest.approx(math.pi)
        assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)

    def test_default_gamma_for_unit_square(self):
        gamma = default_gamma(SpaceBounds((0.0, 0.0), (1.0, 1.0)))
        assert gamma == pytest.approx(2 * math.sqrt(1.5) * math.sqrt(1 / math.pi))

    def test_radius_formula(self):
        assert neighborhood_radius(100, 2, 3.0, 10.0) == pytest.approx(
            3.0 * math.sqrt(math.log(100) / 100)
        )

    def test_radius_for_a_single_vertex_uses_log_two(self):
        assert neighborhood_radius(1, 2, 1.0, 10.0) == pytest.approx(math.sqrt(math.log(2)))

    def test_radius_is_capped(self):
        assert neighborhood_radius(10, 2, 100.0, 0.5) == 0.5

    def test_radius_needs_a_vertex(self):
        with pytest.raises(ContractViolation):
            neighborhood_radius(0, 2, 1.0, 1.0)


class TestQueries:
    def test_graph_needs_a_root(self):
        with pytest.raises(ContractViolation):
            PlanGraph([], gamma=1.0, max_radius=1.0)

    def test_roots_have_zero_cost_and_no_parent(self):
        graph = PlanGraph([as_config([0, 0]), as_config([1, 1])], gamma=1.0, max_radius=1.0)
        assert graph.roots == (0, 1)
        assert graph.costs().tolist() == [0.0, 0.0]
        assert graph.parents().tolist() == [-1, -1]

    def test_vertex_view(self):
        graph = chain_graph((0, 0), (1, 0), (2, 0))
        vertex = graph.vertex(1)
        assert vertex.parent == 0
        assert vertex.cost_to_come == 1.0
        assert vertex.children == frozenset({2})
        assert graph.branch(2) == [2, 1, 0]

    def test_no_goal_means_no_path(self):
        graph = chain_graph((0, 0), (1, 0))
        assert graph.best_path() is None
        assert not graph.snapshot.solved
        assert math.isinf(graph.snapshot.best_cost)

    def test_best_path_picks_the_cheapest_goal(self):
        graph = chain_graph((0, 0), (1, 0), (2, 0))
        graph.mark_goal(2)
        graph.mark_goal(1)
        path = graph.best_path()
        assert path.length == 1.0
        assert graph.snapshot == (1.0, 3, True)

    def test_goal_at_root_gives_a_zero_length_path(self):
        graph = chain_graph((0, 0), (1, 0))
        graph.mark_goal(0)
        path = graph.best_path()
        assert len(path) == 2
        assert path.length == 0.0

    def test_dump_format(self):
        graph = chain_graph((0, 0), (0.5, 0))
        stream = io.StringIO()
        graph.dump(stream)
        assert stream.getvalue().splitlines() == ["0 - 0.0 0.0 0.0", "1 0 0.5 0.5 0.0"]

    def test_examined_edges_are_ordered_pairs(self):
        graph = chain_graph((0, 0), (1, 0), (2, 0))
        assert sorted(graph.examined_edges()) == [(0, 1, 1.0), (1, 2, 1.0)]


class TestRewireInsert:
    def test_new_vertex_takes_the_cheapest_parent(self, open_scenario):
        graph = chain_graph((0, 0), (1, 0), (2, 0))
        v = graph.rewire_insert(as_config([1, 1]), open_scenario)
        assert graph.parent(v) == 0
        assert graph.cost(v) == pytest.approx(math.sqrt(2))

    def test_neighbour_is_rewired_through_the_new_vertex(self, open_scenario):
        graph = chain_graph((0, 0), (0, 2), (2, 2), max_radius=3.0)
        v = graph.rewire_insert(as_config([1, 1]), open_scenario)
        assert graph.parent(v) == 0
        assert graph.parent(2) == v
        assert graph.cost(2) == pytest.approx(2 * math.sqrt(2))
        assert graph.cost(1) == 2.0

    def test_blocked_candidates_are_not_used(self, box_scenario):
        # (0.5, 2) to (3.5, 2.5) runs through the block
        graph = PlanGraph([box_scenario.start_config], gamma=1e6, max_radius=10.0)
        graph.add_vertex(as_config([2.0, 3.6]), 0)
        v = graph.rewire_insert(as_config([3.5, 2.5]), box_scenario, anchor=1)
        assert graph.parent(v) == 1

    def test_descendants_follow_a_cheaper_parent(self, open_scenario):
        graph = chain_graph((0, 0), (0, 2), (2, 2), (3, 2), max_radius=2.0)
        graph.rewire_insert(as_config([1, 1]), open_scenario)
        assert graph.cost(3) == pytest.approx(2 * math.sqrt(2) + 1.0)
        assert not tree_violations(graph)

    def test_costs_match_dijkstra_over_examined_edges(self, box_scenario, use_kdtree):
        rng = np.random.default_rng(7)
        for _ in range(30):
            graph = random_graph(box_scenario, rng, 30, 0.8, use_kdtree=use_kdtree)
            expected = dijkstra_costs(len(graph), graph.roots, graph.examined_edges())
            np.testing.assert_allclose(graph.costs(), expected, rtol=0, atol=1e-9)
            assert not tree_violations(graph)


class TestInsertPath:
    def test_path_must_start_at_a_root(self, open_scenario):
        graph = chain_graph((0, 0), (1, 0))
        with pytest.raises(ContractViolation):
            graph.insert_path(PathSolution(((1.0, 1.0), (2.0, 2.0))), open_scenario)

    def test_path_into_a_bare_root(self, open_scenario):
        graph = PlanGraph([open_scenario.start_config], gamma=1e6, max_radius=1.0)
        path = PathSolution(((0.0, 0.0), (1.0, 1.0), (2.0, 1.0)))
        ids = graph.insert_path(path, open_scenario)
        assert ids == [0, 1, 2]
        assert graph.goal_ids == {2}
        assert graph.snapshot.best_cost == pytest.approx(path.length)

    def test_existing_vertices_are_reused(self, open_scenario):
        graph = PlanGraph([open_scenario.start_config], gamma=1e6, max_radius=1.0)
        path = PathSolution(((0.0, 0.0), (1.0, 1.0), (2.0, 1.0)))
        first = graph.insert_path(path, open_scenario)
        second = graph.insert_path(path, open_scenario)
        assert first == second
        assert len(graph) == 3

    def test_goal_flag_can_be_off(self, open_scenario):
        graph = PlanGraph([open_scenario.start_config], gamma=1e6, max_radius=1.0)
        graph.insert_path(PathSolution(((0.0, 0.0), (1.0, 0.0))), open_scenario, goal=False)
        assert not graph.snapshot.solved

    def test_shorter_path_lowers_the_best_cost(self, open_scenario):
        graph = PlanGraph([open_scenario.start_config], gamma=1e6, max_radius=1.0)
        graph.insert_path(PathSolution(((0, 0), (0, 2), (2, 2), (2, 0))), open_scenario)
        assert graph.snapshot.best_cost == pytest.approx(6.0)
        graph.insert_path(PathSolution(((0, 0), (1, 0), (2, 0))), open_scenario)
        assert graph.snapshot.best_cost == pytest.approx(2.0)
        assert not tree_violations(graph)

    def test_insertion_never_worsens_the_graph(self, box_scenario, use_kdtree):
        rng = np.random.default_rng(11)
        for _ in range(10):
            graph = random_graph(box_scenario, rng, 25, 0.8, use_kdtree=use_kdtree)
            if rng.random() < 0.5:
                graph.mark_goal(int(rng.integers(len(graph))))
            for _ in range(5):
                before_best = graph.snapshot.best_cost
                before_costs = graph.costs()
                path = random_valid_path(box_scenario, rng, 6, 0.8)
                graph.insert_path(path, box_scenario)

                assert graph.snapshot.best_cost <= min(before_best, path.length) + 1e-9
                assert np.all(graph.costs()[: len(before_costs)] <= before_costs + 1e-9)
                expected = dijkstra_costs(len(graph), graph.roots, graph.examined_edges())
                np.testing.assert_allclose(graph.costs(), expected, rtol=0, atol=1e-9)
                assert not tree_violations(graph)
