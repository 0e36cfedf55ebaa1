"""
Fixtures and steps shared by the anyplan acceptance tests.
"""
import numpy as np
import pytest
from pytest_bdd import given, parsers

from anyplan.world.scenario import load_suite
from tests.oracles import random_graph

from .util import step_for


@pytest.fixture(name="suite", scope="session")
def fixture_suite():
    return {scenario.name: scenario for scenario in load_suite()}


@given(parsers.parse("the {name} scenario"), target_fixture="world")
def the_scenario(name, suite):
    return suite[name]


@given(
    parsers.parse("{count:d} random plan graphs over every suite scenario"),
    target_fixture="graphs",
)
def random_plan_graphs(count, suite):
    rng = np.random.default_rng(1)
    scenarios = list(suite.values())
    graphs = []
    for k in range(count):
        scenario = scenarios[k % len(scenarios)]
        graph = random_graph(scenario, rng, 30, step_for(scenario))
        if rng.random() < 0.5:
            graph.mark_goal(int(rng.integers(len(graph))))
        graphs.append((scenario, graph))
    return graphs
