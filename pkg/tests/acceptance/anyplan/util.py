"""
Helpers shared by the anyplan acceptance tests.
"""
import numpy as np

from anyplan.world.domain import Scenario


def step_for(scenario: Scenario) -> float:
    """
    Steering step used for random graphs and paths: a fixed fraction of the
    widest extent of the scenario's space.
    """
    extent = np.asarray(scenario.space.upper) - np.asarray(scenario.space.lower)
    return 0.15 * float(np.max(extent))
