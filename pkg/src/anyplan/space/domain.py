"""
The anyplan.space.domain module holds the configuration space entities:
configurations, sampling bounds, informed (ellipsoidal) regions, and the
metric, interpolation and sampling operations every planner builds on.

Configurations are float64 numpy vectors. All randomness is drawn from a
numpy Generator passed in by the caller; nothing here touches a global RNG.
"""
import dataclasses
import logging
import math
from typing import Sequence

import numpy as np
import numpy.typing as npt

LOGGER = logging.getLogger(__name__)

Config = npt.NDArray[np.float64]
RandomStream = np.random.Generator

# attempts at an in-bounds informed sample before falling back to a point on
# the start-goal segment, which always satisfies the ellipse inequality
MAX_INFORMED_ATTEMPTS = 1000

SEGMENT_TOLERANCE = 1e-9


class ContractViolation(ValueError):
    """
    Raised when an operation is called with arguments that break its
    precondition.
    """


def as_config(coords: Sequence[float]) -> Config:
    """
    Convert a coordinate sequence into a read-only configuration vector.

    :param coords: coordinate values
    :return: float64 vector
    """
    config = np.array(coords, dtype=np.float64).reshape(-1)
    if config.size < 1:
        raise ContractViolation("A configuration needs at least one coordinate")
    config.setflags(write=False)
    return config


def _check_dims(a: Config, b: Config) -> None:
    if a.shape != b.shape:
        raise ContractViolation(
            f"Dimension mismatch: {a.shape[0]} != {b.shape[0]}"
        )


@dataclasses.dataclass(frozen=True)
class SpaceBounds:
    """
    Per-dimension lower and upper limits of the configuration space.
    """

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise ContractViolation(
                f"Bounds need equal, non-zero lengths: {len(lower)} vs {len(upper)}"
            )
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if not lo < hi:
                raise ContractViolation(f"Bounds dimension {i}: {lo} is not < {hi}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def measure(self) -> float:
        """Lebesgue measure of the bounding box."""
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def contains(self, q: Config) -> bool:
        return bool(np.all(q >= self.lower) and np.all(q <= self.upper))


@dataclasses.dataclass(frozen=True)
class InformedRegion:
    """
    The prolate hyperspheroid of configurations that could lie on a path
    from start to goal no longer than c_best.
    """

    start: Config
    goal: Config
    c_best: float = math.inf

    def __post_init__(self):
        _check_dims(self.start, self.goal)
        if self.c_best < 0:
            raise ContractViolation(f"c_best must be non-negative: {self.c_best}")

    @property
    def c_min(self) -> float:
        return distance(self.start, self.goal)

    def contains(self, x: Config, tolerance: float = SEGMENT_TOLERANCE) -> bool:
        return (
            distance(self.start, x) + distance(x, self.goal)
            <= max(self.c_best, self.c_min) + tolerance
        )


def distance(a: Config, b: Config) -> float:
    """
    Euclidean distance between two configurations.

    :raises ContractViolation: if the configurations differ in dimension
    """
    _check_dims(a, b)
    return float(np.linalg.norm(a - b))


def interpolate(a: Config, b: Config, t: float) -> Config:
    """
    Return a + t(b - a). Both endpoints are returned exactly for t = 0 and
    t = 1.
    """
    _check_dims(a, b)
    if not 0.0 <= t <= 1.0:
        raise ContractViolation(f"Interpolation parameter out of range: {t}")
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    return a + t * (b - a)


def steer(a: Config, b: Config, step: float) -> Config:
    """
    Move from a towards b by at most step. b itself is returned when it is
    within reach so that trees can meet exactly.
    """
    d = distance(a, b)
    if d <= step:
        return b
    return a + (step / d) * (b - a)


def sample_uniform(bounds: SpaceBounds, rng: RandomStream) -> Config:
    """
    Draw a configuration uniformly from the bounding box.
    """
    return rng.uniform(bounds.lower, bounds.upper)


def _sample_unit_ball(dimension: int, rng: RandomStream) -> Config:
    direction = rng.standard_normal(dimension)
    norm = np.linalg.norm(direction)
    while norm == 0.0:
        direction = rng.standard_normal(dimension)
        norm = np.linalg.norm(direction)
    radius = rng.random() ** (1.0 / dimension)
    return direction * (radius / norm)


def _rotation_to_world(start: Config, goal: Config, c_min: float) -> np.ndarray:
    dimension = start.shape[0]
    if c_min == 0.0:
        return np.eye(dimension)
    a1 = (goal - start) / c_min
    m = np.outer(a1, np.eye(dimension)[0])
    u, _, vh = np.linalg.svd(m)
    diag = np.ones(dimension)
    diag[-1] = np.linalg.det(u) * np.linalg.det(vh)
    return u @ np.diag(diag) @ vh


def sample_informed(
    region: InformedRegion, bounds: SpaceBounds, rng: RandomStream
) -> Config:
    """
    Draw a configuration uniformly from the informed region intersected with
    the bounds.

    The hyperspheroid is sampled directly: a unit-ball sample is scaled by
    the transverse and conjugate radii, rotated onto the start-goal axis and
    translated to the centre. Only the bounds are handled by rejection.
    """
    if math.isinf(region.c_best):
        return sample_uniform(bounds, rng)

    c_min = region.c_min
    # numeric noise can leave c_best fractionally below the segment length
    c_best = max(region.c_best, c_min)

    dimension = region.start.shape[0]
    rotation = _rotation_to_world(region.start, region.goal, c_min)
    conjugate = math.sqrt(max(c_best * c_best - c_min * c_min, 0.0)) / 2.0
    radii = np.full(dimension, conjugate)
    radii[0] = c_best / 2.0
    transform = rotation * radii
    centre = (region.start + region.goal) / 2.0

    for _ in range(MAX_INFORMED_ATTEMPTS):
        x = transform @ _sample_unit_ball(dimension, rng) + centre
        if bounds.contains(x):
            return x

    LOGGER.debug(
        "No in-bounds informed sample after %s attempts, using start-goal segment",
        MAX_INFORMED_ATTEMPTS,
    )
    return interpolate(region.start, region.goal, float(rng.random()))


def heuristic_cost(start: Config, goals: Sequence[Config], x: Config) -> float:
    """
    Admissible estimate of the cost of the best path from start through x
    to any goal.
    """
    return distance(start, x) + min(distance(x, g) for g in goals)


def sample_informed_goals(
    start: Config,
    goals: Sequence[Config],
    c_best: float,
    bounds: SpaceBounds,
    rng: RandomStream,
) -> Config:
    """
    Draw uniformly from the union of the informed regions of every goal.

    A goal is chosen with probability proportional to the measure of its
    ellipse and the sample is kept with probability 1/k, where k is the
    number of ellipses containing it. Goals that cannot be reached within
    c_best contribute nothing.
    """
    if math.isinf(c_best):
        return sample_uniform(bounds, rng)

    regions = [
        InformedRegion(start, goal, c_best)
        for goal in goals
        if distance(start, goal) < c_best
    ]
    if not regions:
        return sample_uniform(bounds, rng)
    if len(regions) == 1:
        return sample_informed(regions[0], bounds, rng)

    dimension = start.shape[0]
    weights = np.array(
        [
            c_best * (c_best * c_best - r.c_min * r.c_min) ** ((dimension - 1) / 2.0)
            for r in regions
        ]
    )
    weights /= weights.sum()
    while True:
        region = regions[rng.choice(len(regions), p=weights)]
        x = sample_informed(region, bounds, rng)
        multiplicity = sum(1 for r in regions if r.contains(x))
        if rng.random() * max(multiplicity, 1) < 1.0:
            return x


def path_length(configs: Sequence[Config]) -> float:
    """
    Sum of the Euclidean lengths of each path segment.

    :raises ContractViolation: if the path has fewer than two vertices
    """
    if len(configs) < 2:
        raise ContractViolation(
            f"A path needs at least 2 vertices, got {len(configs)}"
        )
    points = np.asarray(configs, dtype=np.float64)
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())


@dataclasses.dataclass(frozen=True)
class PathSolution:
    """
    An ordered sequence of configurations with its cached Euclidean length.
    """

    configs: tuple
    length: float = dataclasses.field(init=False)

    def __post_init__(self):
        configs = tuple(as_config(c) for c in self.configs)
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "length", path_length(configs))

    def __len__(self) -> int:
        return len(self.configs)

    @property
    def start(self) -> Config:
        return self.configs[0]

    @property
    def end(self) -> Config:
        return self.configs[-1]

    def reversed(self) -> "PathSolution":
        return PathSolution(tuple(reversed(self.configs)))

    def __eq__(self, other):
        if not isinstance(other, PathSolution):
            return False
        return len(self) == len(other) and all(
            np.array_equal(a, b) for a, b in zip(self.configs, other.configs)
        )

    __hash__ = None

