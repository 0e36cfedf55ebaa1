"""
The anyplan.world.domain module holds the world geometry and collision
checking for the two desk-scale worlds: a point robot in the plane and a
planar N-link arm, both among convex polygons and circles.

Obstacles are closed sets: touching a boundary counts as a collision.
Polygon tests use separating-axis projections so that a whole batch of
points or segments is checked with a few numpy operations.
"""
import dataclasses
import enum
import functools
import logging
import math
from typing import List, Sequence, Tuple, Union

import numpy as np

from anyplan.space.domain import (
    Config,
    ContractViolation,
    SpaceBounds,
    as_config,
    distance,
)

LOGGER = logging.getLogger(__name__)

# tolerance for degenerate contacts in the exact geometric predicates
GEOMETRY_EPS = 1e-12

Point = Tuple[float, float]
Segment = Tuple[Point, Point]


class WorldKind(enum.Enum):
    """
    The kind of robot moving through the world.
    """

    POINT2D = "point2d"
    PLANAR_ARM = "planar_arm"


@dataclasses.dataclass(frozen=True)
class Polygon:
    """
    A convex polygon with counterclockwise vertices. Two vertices describe a
    closed segment, for walls of zero thickness.
    """

    points: Tuple[Point, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "points", tuple((float(x), float(y)) for x, y in self.points)
        )


@dataclasses.dataclass(frozen=True)
class Circle:
    """
    A closed disc.
    """

    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(
            self, "center", (float(self.center[0]), float(self.center[1]))
        )
        object.__setattr__(self, "radius", float(self.radius))


Obstacle = Union[Polygon, Circle]


def polygon_defect(polygon: Polygon) -> str:
    """
    Describe why a polygon is not a valid obstacle, or return an empty
    string if it is valid.
    """
    points = np.asarray(polygon.points)
    if len(points) < 2:
        return "needs at least 2 points"
    edges = np.roll(points, -1, axis=0) - points
    if np.any(np.linalg.norm(edges, axis=1) <= GEOMETRY_EPS):
        return "has repeated consecutive points"
    if len(points) == 2:
        return ""
    following = np.roll(edges, -1, axis=0)
    turns = edges[:, 0] * following[:, 1] - edges[:, 1] * following[:, 0]
    if np.any(turns <= GEOMETRY_EPS):
        return "is not convex with counterclockwise vertices"
    # a star-shaped loop turns left everywhere but winds more than once
    winding = np.sum(np.arctan2(turns, np.sum(edges * following, axis=1)))
    if not math.isclose(winding, 2 * math.pi, abs_tol=1e-6):
        return "is not convex with counterclockwise vertices"
    return ""


def _unit(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    return np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)


def _perp(vectors: np.ndarray) -> np.ndarray:
    return np.stack((-vectors[..., 1], vectors[..., 0]), axis=-1)


class CollisionChecker:
    """
    Batch collision queries against one set of obstacles.

    Each polygon contributes its edge normals and edge directions as
    projection axes, padded to a common count so that all polygons are
    tested in one broadcast. Points and segments overlap a polygon when
    their projections overlap the polygon's projection on every axis
    (including, for segments, the segment's own normal).
    """

    def __init__(self, obstacles: Sequence[Obstacle]):
        polygons = [o for o in obstacles if isinstance(o, Polygon)]
        circles = [o for o in obstacles if isinstance(o, Circle)]

        if polygons:
            n_vertices = max(len(p.points) for p in polygons)
            verts = np.empty((len(polygons), n_vertices, 2))
            axes = np.empty((len(polygons), 2 * n_vertices, 2))
            for i, polygon in enumerate(polygons):
                points = np.asarray(polygon.points)
                edges = _unit(np.roll(points, -1, axis=0) - points)
                poly_axes = np.concatenate((_perp(edges), edges))
                # padding repeats an existing vertex or axis, which changes
                # nothing in the overlap tests
                verts[i] = np.concatenate(
                    (points, np.repeat(points[-1:], n_vertices - len(points), 0))
                )
                axes[i] = np.concatenate(
                    (poly_axes, np.repeat(poly_axes[-1:], 2 * n_vertices - len(poly_axes), 0))
                )
            projections = np.einsum("pvi,pki->pkv", verts, axes)
            self._verts = verts
            self._axes = axes
            self._lo = projections.min(axis=2)
            self._hi = projections.max(axis=2)
        else:
            self._verts = np.empty((0, 1, 2))
            self._axes = np.empty((0, 1, 2))
            self._lo = np.empty((0, 1))
            self._hi = np.empty((0, 1))

        self._centers = np.array([c.center for c in circles]).reshape(-1, 2)
        self._radii = np.array([c.radius for c in circles])

    def points_collide(self, points: np.ndarray) -> np.ndarray:
        """
        :param points: (m, 2) array of world points
        :return: (m,) boolean array, True where a point touches an obstacle
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        hit = np.zeros(len(points), dtype=bool)
        if len(self._axes):
            proj = np.einsum("mi,pki->mpk", points, self._axes)
            inside = np.all(
                (proj >= self._lo - GEOMETRY_EPS) & (proj <= self._hi + GEOMETRY_EPS),
                axis=2,
            )
            hit |= inside.any(axis=1)
        if len(self._radii):
            offsets = points[:, None, :] - self._centers[None, :, :]
            dist = np.linalg.norm(offsets, axis=2)
            hit |= np.any(dist <= self._radii + GEOMETRY_EPS, axis=1)
        return hit

    def segments_collide(self, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
        """
        :param starts: (m, 2) segment start points
        :param ends: (m, 2) segment end points
        :return: (m,) boolean array, True where a segment touches an obstacle
        """
        starts = np.asarray(starts, dtype=np.float64).reshape(-1, 2)
        ends = np.asarray(ends, dtype=np.float64).reshape(-1, 2)
        hit = np.zeros(len(starts), dtype=bool)
        if len(self._axes):
            pa = np.einsum("mi,pki->mpk", starts, self._axes)
            pb = np.einsum("mi,pki->mpk", ends, self._axes)
            overlap = np.all(
                (np.maximum(pa, pb) >= self._lo - GEOMETRY_EPS)
                & (np.minimum(pa, pb) <= self._hi + GEOMETRY_EPS),
                axis=2,
            )
            normals = _unit(_perp(ends - starts))
            offset = np.sum(starts * normals, axis=1)[:, None]
            vproj = np.einsum("pvi,mi->mpv", self._verts, normals)
            overlap &= (vproj.max(axis=2) >= offset - GEOMETRY_EPS) & (
                vproj.min(axis=2) <= offset + GEOMETRY_EPS
            )
            hit |= overlap.any(axis=1)
        if len(self._radii):
            hit |= np.any(
                _point_segment_distance(self._centers[None, :, :], starts, ends)
                <= self._radii + GEOMETRY_EPS,
                axis=1,
            )
        return hit


def _point_segment_distance(
    points: np.ndarray, starts: np.ndarray, ends: np.ndarray
) -> np.ndarray:
    """
    Distance from each of C points to each of m segments, shape (m, C).
    """
    direction = (ends - starts)[:, None, :]
    rel = points - starts[:, None, :]
    length2 = np.sum(direction * direction, axis=2)
    t = np.divide(
        np.sum(rel * direction, axis=2),
        length2,
        out=np.zeros(length2.shape[:1] + points.shape[1:2]),
        where=length2 > 0,
    )
    t = np.clip(t, 0.0, 1.0)
    closest = starts[:, None, :] + t[..., None] * direction
    return np.linalg.norm(points - closest, axis=2)


def segments_intersect(
    a0: np.ndarray, a1: np.ndarray, b0: np.ndarray, b1: np.ndarray
) -> np.ndarray:
    """
    Closed segment-segment intersection for batches of segment pairs.

    Both segments must have non-zero length. Each array is (m, 2).
    """
    da = _unit(a1 - a0)
    db = _unit(b1 - b0)
    hit = np.ones(len(a0), dtype=bool)
    for axis in (_perp(da), _perp(db), da, db):
        pa0 = np.sum(a0 * axis, axis=1)
        pa1 = np.sum(a1 * axis, axis=1)
        pb0 = np.sum(b0 * axis, axis=1)
        pb1 = np.sum(b1 * axis, axis=1)
        hit &= (np.maximum(pa0, pa1) >= np.minimum(pb0, pb1) - GEOMETRY_EPS) & (
            np.minimum(pa0, pa1) <= np.maximum(pb0, pb1) + GEOMETRY_EPS
        )
    return hit


def arm_joints(
    link_lengths: Sequence[float], base: Sequence[float], angles: np.ndarray
) -> np.ndarray:
    """
    Joint positions of a planar arm for a batch of joint-angle vectors.

    :param angles: (m, n) joint angles, cumulative along the chain
    :return: (m, n + 1, 2) joint positions, base first
    """
    angles = np.asarray(angles, dtype=np.float64)
    absolute = np.cumsum(angles, axis=1)
    lengths = np.asarray(link_lengths, dtype=np.float64)
    steps = np.stack((lengths * np.cos(absolute), lengths * np.sin(absolute)), axis=2)
    joints = np.concatenate(
        (np.zeros((len(angles), 1, 2)), np.cumsum(steps, axis=1)), axis=1
    )
    return joints + np.asarray(base, dtype=np.float64)


def arm_forward_kinematics(
    link_lengths: Sequence[float], base: Sequence[float], angles: Sequence[float]
) -> List[Segment]:
    """
    World-frame segments of each link of a planar arm. Link i runs from
    joint i to joint i + 1 and its world angle is the sum of angles[0..i].

    :raises ContractViolation: if lengths and angles differ in count
    """
    if len(link_lengths) != len(angles):
        raise ContractViolation(
            f"{len(link_lengths)} link lengths but {len(angles)} joint angles"
        )
    joints = arm_joints(link_lengths, base, np.asarray(angles)[None, :])[0]
    return [
        (tuple(joints[i].tolist()), tuple(joints[i + 1].tolist()))
        for i in range(len(link_lengths))
    ]


@dataclasses.dataclass(frozen=True)
class WorldGeometry:
    """
    The obstacles of a world and, for the arm world, the arm itself.
    """

    kind: WorldKind
    obstacles: Tuple[Obstacle, ...] = ()
    link_lengths: Tuple[float, ...] = ()
    base: Point = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(
            self, "link_lengths", tuple(float(v) for v in self.link_lengths)
        )
        object.__setattr__(self, "base", (float(self.base[0]), float(self.base[1])))

    @functools.cached_property
    def checker(self) -> CollisionChecker:
        return CollisionChecker(self.obstacles)

    @functools.cached_property
    def _link_pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        n = len(self.link_lengths)
        pairs = [(i, j) for i in range(n) for j in range(i + 2, n)]
        first = np.array([i for i, _ in pairs], dtype=int)
        second = np.array([j for _, j in pairs], dtype=int)
        return first, second

    @property
    def dimension(self) -> int:
        if self.kind is WorldKind.POINT2D:
            return 2
        return len(self.link_lengths)

    def configs_free(self, configs: np.ndarray) -> np.ndarray:
        """
        :param configs: (m, d) configurations
        :return: (m,) boolean array, True where the robot is collision-free
        """
        configs = np.asarray(configs, dtype=np.float64).reshape(-1, self.dimension)
        if self.kind is WorldKind.POINT2D:
            return ~self.checker.points_collide(configs)

        joints = arm_joints(self.link_lengths, self.base, configs)
        m, n_links = len(configs), len(self.link_lengths)
        starts = joints[:, :-1, :].reshape(-1, 2)
        ends = joints[:, 1:, :].reshape(-1, 2)
        blocked = self.checker.segments_collide(starts, ends).reshape(m, n_links)
        colliding = blocked.any(axis=1)

        first, second = self._link_pairs
        if len(first):
            crossed = segments_intersect(
                joints[:, first, :].reshape(-1, 2),
                joints[:, first + 1, :].reshape(-1, 2),
                joints[:, second, :].reshape(-1, 2),
                joints[:, second + 1, :].reshape(-1, 2),
            ).reshape(m, len(first))
            colliding |= crossed.any(axis=1)
        return ~colliding


@dataclasses.dataclass(frozen=True)
class Scenario:
    """
    A planning query: world, configuration space bounds, start, goal set and
    the motion-check resolution.
    """

    name: str
    space: SpaceBounds
    world: WorldGeometry
    start: Tuple[float, ...]
    goals: Tuple[Tuple[float, ...], ...]
    resolution: float

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(
            self, "goals", tuple(tuple(float(v) for v in g) for g in self.goals)
        )
        object.__setattr__(self, "resolution", float(self.resolution))

    @functools.cached_property
    def start_config(self) -> Config:
        return as_config(self.start)

    @functools.cached_property
    def goal_configs(self) -> Tuple[Config, ...]:
        return tuple(as_config(g) for g in self.goals)

    @property
    def dimension(self) -> int:
        return self.space.dimension


def is_valid(scenario: Scenario, q: Config) -> bool:
    """
    True iff q lies in the bounds and in free space.
    """
    if not scenario.space.contains(q):
        return False
    return bool(scenario.world.configs_free(q)[0])


def motion_configs(scenario: Scenario, a: Config, b: Config) -> np.ndarray:
    """
    The configurations checked for the straight motion between a and b:
    both endpoints and a power-of-two subdivision with spacing at most the
    scenario resolution. Endpoints are ordered first so the set is identical
    for (a, b) and (b, a); halving the resolution only adds points.
    """
    if tuple(a) > tuple(b):
        a, b = b, a
    length = distance(a, b)
    steps = 1
    if length > scenario.resolution:
        steps = 2 ** math.ceil(math.log2(length / scenario.resolution))
    t = np.arange(steps + 1, dtype=np.float64) / steps
    points = a + t[:, None] * (b - a)
    points[0] = a
    points[-1] = b
    return points


def motion_valid(scenario: Scenario, a: Config, b: Config) -> bool:
    """
    True iff every configuration on the straight motion between a and b,
    sampled at the scenario resolution, is valid.
    """
    points = motion_configs(scenario, a, b)
    lower = np.asarray(scenario.space.lower)
    upper = np.asarray(scenario.space.upper)
    if np.any(points < lower) or np.any(points > upper):
        return False
    return bool(np.all(scenario.world.configs_free(points)))
