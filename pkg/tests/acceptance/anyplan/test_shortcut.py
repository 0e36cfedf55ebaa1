"""
Acceptance tests for random shortcutting.
"""
import math

import numpy as np
import pytest
from pytest_bdd import given, parsers, scenario, then, when

from anyplan.shortcut.domain import ShortcutBudget, shortcut
from anyplan.space.domain import PathSolution
from tests.oracles import path_violations, random_valid_path

from .util import step_for

pytestmark = pytest.mark.acceptance


@scenario("features/shortcut.feature", "Shortcutting random valid paths")
def test_shortcutting_random_valid_paths():
    pass


@scenario("features/shortcut.feature", "L-shaped paths shorten to the diagonal")
def test_l_paths_shorten_to_the_diagonal():
    pass


@given(
    parsers.parse("{count:d} random valid paths in every suite scenario"),
    target_fixture="paths",
)
def random_paths(count, suite):
    rng = np.random.default_rng(5)
    return [
        (world, random_valid_path(world, rng, int(rng.integers(2, 9)), step_for(world)))
        for world in suite.values()
        for _ in range(count)
    ]


@when(
    parsers.parse("each path is shortcut with a count factor of {scf:g}"),
    target_fixture="shortcuts",
)
def shortcut_paths(scf, paths):
    rng = np.random.default_rng(6)
    return [
        (world, path, shortcut(path, world, ShortcutBudget.for_path(scf, path), rng))
        for world, path in paths
    ]


@then("no shortcut path is longer than its input")
def never_longer(shortcuts):
    longer = [(w.name, p.length, s.length) for w, p, s in shortcuts if s.length > p.length]
    assert not longer


@then("every shortcut path is motion-valid with the input endpoints")
def valid_with_endpoints(shortcuts):
    for world, path, result in shortcuts:
        assert not path_violations(result, world)
        np.testing.assert_array_equal(result.start, path.start)
        np.testing.assert_array_equal(result.end, path.end)


@when(
    parsers.parse("an L-shaped path through the corner is shortcut with {seeds:d} seeds"),
    target_fixture="l_lengths",
)
def shortcut_l_paths(seeds, world):
    l_path = PathSolution(((0.1, 0.1), (0.9, 0.1), (0.9, 0.9)))
    return [
        shortcut(l_path, world, ShortcutBudget(100.0, 3), np.random.default_rng(seed)).length
        for seed in range(seeds)
    ]


@then("the mean shortcut length is within 1% of the diagonal")
def mean_near_the_diagonal(l_lengths):
    optimum = 0.8 * math.sqrt(2)
    assert optimum - 1e-9 <= np.mean(l_lengths) <= optimum * 1.01
