import multiprocessing

import numpy as np
import pytest

from anyplan.space.domain import SpaceBounds
from anyplan.world.domain import Polygon, Scenario, WorldGeometry, WorldKind
from anyplan.world.scenario import load_suite


@pytest.fixture(name="empty_scenario")
def fixture_empty_scenario():
    """
    Unit square with no obstacles, start at the origin and goal at (1, 1).
    """
    return Scenario(
        name="unit-square",
        space=SpaceBounds((0.0, 0.0), (1.0, 1.0)),
        world=WorldGeometry(WorldKind.POINT2D),
        start=(0.0, 0.0),
        goals=((1.0, 1.0),),
        resolution=0.01,
    )


@pytest.fixture(name="box_scenario")
def fixture_box_scenario():
    """
    [0, 4] x [0, 4] with a square block in the middle, start and goal on
    opposite sides of it.
    """
    block = Polygon(((1.5, 1.0), (2.5, 1.0), (2.5, 3.0), (1.5, 3.0)))
    return Scenario(
        name="box",
        space=SpaceBounds((0.0, 0.0), (4.0, 4.0)),
        world=WorldGeometry(WorldKind.POINT2D, obstacles=(block,)),
        start=(0.5, 2.0),
        goals=((3.5, 2.0),),
        resolution=0.01,
    )


@pytest.fixture(name="walled_scenario")
def fixture_walled_scenario():
    """
    A wall spanning the full height of the space, so the goal is unreachable.
    """
    wall = Polygon(((0.45, -0.1), (0.55, -0.1), (0.55, 1.1), (0.45, 1.1)))
    return Scenario(
        name="walled",
        space=SpaceBounds((0.0, 0.0), (1.0, 1.0)),
        world=WorldGeometry(WorldKind.POINT2D, obstacles=(wall,)),
        start=(0.1, 0.5),
        goals=((0.9, 0.5),),
        resolution=0.01,
    )


@pytest.fixture(name="suite", scope="session")
def fixture_suite():
    return {scenario.name: scenario for scenario in load_suite()}


@pytest.fixture(name="rng")
def fixture_rng():
    return np.random.default_rng(20240611)


@pytest.fixture(
    params=[
        multiprocessing.get_context("spawn"),
        multiprocessing.get_context("fork"),
        multiprocessing.get_context("forkserver"),
    ],
)
def mp_fixture(request):
    """
    Test fixture that returns multiprocessing contexts.

    This fixture is used to ensure that functionality related to
    multiprocessing works correctly with each multiprocessing context, as
    different OSes use a different default multiprocessing context.
    """
    yield request.param
