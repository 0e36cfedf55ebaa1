"""
Random shortcutting: repeatedly replace a stretch of path by the straight
chord between two points sampled along its arc length, whenever the chord is
collision-free and shorter.
"""
import dataclasses
import logging
import math
from typing import List

import numpy as np

from anyplan.space.domain import (
    Config,
    ContractViolation,
    PathSolution,
    RandomStream,
    distance,
    interpolate,
)
from anyplan.world.domain import Scenario, motion_valid

LOGGER = logging.getLogger(__name__)

# a chord must beat the stretch it replaces by more than this
MIN_IMPROVEMENT = 1e-12
# interior vertices closer than this to their neighbours' segment are dropped
COLLINEAR_TOLERANCE = 1e-12


def shortcut_iterations(scf: float, n_vertices: int) -> int:
    """
    Number of shortcut rounds for a path: scf * n_vertices rounded half up,
    never less than one.

    :raises ContractViolation: if the path has fewer than two vertices
    """
    if n_vertices < 2:
        raise ContractViolation(f"A path needs at least 2 vertices, got {n_vertices}")
    return max(1, int(math.floor(scf * n_vertices + 0.5)))


@dataclasses.dataclass(frozen=True)
class ShortcutBudget:
    """
    Shortcut effort for one call, fixed from the vertex count of the path
    as passed in.
    """

    scf: float
    n_vertices: int

    def __post_init__(self):
        if not self.scf > 0:
            raise ContractViolation(f"Shortcut count factor must be positive: {self.scf}")

    @property
    def iterations(self) -> int:
        return shortcut_iterations(self.scf, self.n_vertices)

    @staticmethod
    def for_path(scf: float, path: PathSolution) -> "ShortcutBudget":
        return ShortcutBudget(scf, len(path))


def _point_at(configs: List[Config], arc: np.ndarray, s: float, segment: int) -> Config:
    start, end = arc[segment], arc[segment + 1]
    t = min(max((s - start) / (end - start), 0.0), 1.0)
    return interpolate(configs[segment], configs[segment + 1], t)


def _segment_gap(p: Config, a: Config, b: Config) -> float:
    ab = b - a
    denominator = float(ab @ ab)
    if denominator == 0.0:
        return distance(p, a)
    t = min(max(float((p - a) @ ab) / denominator, 0.0), 1.0)
    return distance(p, a + t * ab)


def _drop_collinear(configs: List[Config], scenario: Scenario) -> List[Config]:
    kept = [configs[0]]
    for k in range(1, len(configs) - 1):
        following = configs[k + 1]
        if _segment_gap(configs[k], kept[-1], following) < COLLINEAR_TOLERANCE and motion_valid(
            scenario, kept[-1], following
        ):
            continue
        kept.append(configs[k])
    kept.append(configs[-1])
    return kept


def shortcut(
    path: PathSolution, scenario: Scenario, budget: ShortcutBudget, rng: RandomStream
) -> PathSolution:
    """
    Shorten a valid path by random shortcutting.

    Each round samples two arc-length positions, possibly inside segments.
    When the chord between them is valid and shorter by more than
    MIN_IMPROVEMENT it is spliced in, with its endpoints becoming new
    vertices. Collinear vertices are removed once at the end. The first and
    last configurations of the result are the input's own.

    :param path: motion-valid path
    :param scenario: scenario used for connection checks
    :param budget: number of rounds to perform
    :param rng: random stream owned by the caller
    :return: a path no longer than the input
    """
    configs = list(path.configs)
    spliced = 0
    for _ in range(budget.iterations):
        segments = np.linalg.norm(np.diff(np.asarray(configs), axis=0), axis=1)
        arc = np.concatenate(([0.0], np.cumsum(segments)))
        total = arc[-1]
        if total == 0.0:
            break

        s1, s2 = sorted(rng.uniform(0.0, total, size=2))
        i = min(int(np.searchsorted(arc, s1, side="right")) - 1, len(configs) - 2)
        j = min(int(np.searchsorted(arc, s2, side="right")) - 1, len(configs) - 2)
        if i == j:
            continue

        p1 = _point_at(configs, arc, s1, i)
        p2 = _point_at(configs, arc, s2, j)
        replaced = (
            distance(p1, configs[i + 1])
            + float(arc[j] - arc[i + 1])
            + distance(configs[j], p2)
        )
        if distance(p1, p2) >= replaced - MIN_IMPROVEMENT:
            continue
        if not (
            motion_valid(scenario, p1, p2)
            and motion_valid(scenario, configs[i], p1)
            and motion_valid(scenario, p2, configs[j + 1])
        ):
            continue
        configs = configs[: i + 1] + [p1, p2] + configs[j + 1 :]
        spliced += 1

    if not spliced:
        return path
    result = PathSolution(tuple(_drop_collinear(configs, scenario)))
    LOGGER.debug(
        "Shortcut %s splices in %s rounds: %.6g -> %.6g",
        spliced,
        budget.iterations,
        path.length,
        result.length,
    )
    return result
