"""
Unit tests for the anyplan.world.domain module.
"""
# pylint: disable=no-self-use
import dataclasses
import math

import numpy as np
import pytest

from anyplan.space.domain import ContractViolation, SpaceBounds, as_config
from anyplan.world.domain import (
    Circle,
    CollisionChecker,
    Polygon,
    Scenario,
    WorldGeometry,
    WorldKind,
    arm_forward_kinematics,
    is_valid,
    motion_configs,
    motion_valid,
    polygon_defect,
    segments_intersect,
)
from tests.oracles import winding_number

HEXAGON = Polygon(
    tuple(
        (2.0 + math.cos(k * math.pi / 3), 1.0 + 0.5 * math.sin(k * math.pi / 3))
        for k in range(6)
    )
)


def arm_scenario(link_lengths, obstacles=()):
    n = len(link_lengths)
    return Scenario(
        name="arm",
        space=SpaceBounds((-math.pi,) * n, (math.pi,) * n),
        world=WorldGeometry(
            WorldKind.PLANAR_ARM, obstacles=obstacles, link_lengths=link_lengths
        ),
        start=(0.0,) * n,
        goals=((0.0,) * n,),
        resolution=0.02,
    )


class TestPolygonDefects:
    def test_counterclockwise_convex_polygon_is_valid(self):
        assert polygon_defect(HEXAGON) == ""

    def test_two_point_wall_is_valid(self):
        assert polygon_defect(Polygon(((0, 0), (1, 1)))) == ""

    def test_clockwise_polygon_is_rejected(self):
        clockwise = Polygon(tuple(reversed(HEXAGON.points)))
        assert "counterclockwise" in polygon_defect(clockwise)

    def test_non_convex_polygon_is_rejected(self):
        dart = Polygon(((0, 0), (2, 0), (1, 0.5), (2, 2), (0, 2)))
        assert polygon_defect(dart)

    def test_star_is_rejected(self):
        star = Polygon(
            tuple(
                (math.cos(k * 4 * math.pi / 5), math.sin(k * 4 * math.pi / 5))
                for k in range(5)
            )
        )
        assert polygon_defect(star)

    def test_repeated_point_is_rejected(self):
        assert "repeated" in polygon_defect(Polygon(((0, 0), (0, 0), (1, 1))))


class TestCollisionChecker:
    def test_points_match_winding_number_oracle(self, rng):
        checker = CollisionChecker((HEXAGON,))
        points = rng.uniform((0.5, 0.0), (3.5, 2.0), size=(2000, 2))
        hits = checker.points_collide(points)
        expected = [winding_number(p, HEXAGON.points) != 0 for p in points]
        assert hits.tolist() == expected

    def test_circle_is_closed(self):
        checker = CollisionChecker((Circle((0.0, 0.0), 1.0),))
        assert checker.points_collide(np.array([[1.0, 0.0], [1.0 + 1e-6, 0.0]])).tolist() == [
            True,
            False,
        ]

    def test_segment_crossing_polygon_collides(self):
        checker = CollisionChecker((HEXAGON,))
        starts = np.array([[0.0, 1.0], [0.0, 3.0]])
        ends = np.array([[4.0, 1.0], [4.0, 3.0]])
        assert checker.segments_collide(starts, ends).tolist() == [True, False]

    def test_segment_passing_a_circle_tangentially_collides(self):
        checker = CollisionChecker((Circle((0.0, 0.0), 1.0),))
        assert checker.segments_collide(
            np.array([[-2.0, 1.0], [-2.0, 1.1]]), np.array([[2.0, 1.0], [2.0, 1.1]])
        ).tolist() == [True, False]

    def test_wall_of_zero_thickness_blocks_crossing_segments(self):
        checker = CollisionChecker((Polygon(((1.0, 0.0), (1.0, 2.0))),))
        starts = np.array([[0.0, 1.0], [0.0, 3.0]])
        ends = np.array([[2.0, 1.0], [2.0, 3.0]])
        assert checker.segments_collide(starts, ends).tolist() == [True, False]

    def test_empty_world_collides_with_nothing(self):
        checker = CollisionChecker(())
        assert not checker.points_collide(np.zeros((3, 2))).any()


class TestSegmentsIntersect:
    def test_crossing_and_disjoint_segments(self):
        a0 = np.array([[0.0, 0.0], [0.0, 0.0]])
        a1 = np.array([[1.0, 1.0], [1.0, 0.0]])
        b0 = np.array([[0.0, 1.0], [0.0, 1.0]])
        b1 = np.array([[1.0, 0.0], [1.0, 1.0]])
        assert segments_intersect(a0, a1, b0, b1).tolist() == [True, False]

    def test_touching_endpoints_intersect(self):
        a0, a1 = np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]])
        b0, b1 = np.array([[1.0, 0.0]]), np.array([[1.0, 1.0]])
        assert segments_intersect(a0, a1, b0, b1).tolist() == [True]


class TestPlanarArm:
    def test_forward_kinematics(self):
        segments = arm_forward_kinematics((1.0, 1.0), (0.0, 0.0), (math.pi / 2, -math.pi / 2))
        np.testing.assert_allclose(np.array(segments[0]), [[0, 0], [0, 1]], atol=1e-12)
        np.testing.assert_allclose(np.array(segments[1]), [[0, 1], [1, 1]], atol=1e-12)

    def test_forward_kinematics_rejects_count_mismatch(self):
        with pytest.raises(ContractViolation):
            arm_forward_kinematics((1.0, 1.0), (0.0, 0.0), (0.0,))

    def test_straight_arm_is_free(self):
        scenario = arm_scenario((1.0, 1.0, 1.0))
        assert is_valid(scenario, as_config([0.0, 0.0, 0.0]))

    def test_folded_arm_collides_with_itself(self):
        scenario = arm_scenario((1.0, 1.0, 1.0))
        assert not is_valid(scenario, as_config([0.0, 3 * math.pi / 4, 3 * math.pi / 4]))

    def test_link_touching_an_obstacle_collides(self):
        scenario = arm_scenario((1.0, 1.0), obstacles=(Circle((1.5, 0.5), 0.6),))
        assert not is_valid(scenario, as_config([0.0, 0.0]))
        assert is_valid(scenario, as_config([-math.pi / 2, 0.0]))


class TestMotion:
    def test_motion_configs_are_symmetric(self, rng, box_scenario):
        for _ in range(50):
            a, b = rng.uniform(0, 4, size=(2, 2))
            forward = motion_configs(box_scenario, as_config(a), as_config(b))
            backward = motion_configs(box_scenario, as_config(b), as_config(a))
            np.testing.assert_array_equal(forward, backward)
            assert motion_valid(box_scenario, as_config(a), as_config(b)) == motion_valid(
                box_scenario, as_config(b), as_config(a)
            )

    def test_motion_configs_respect_resolution(self, box_scenario):
        points = motion_configs(box_scenario, as_config([0.1, 0.1]), as_config([3.9, 3.7]))
        steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
        assert steps.max() <= box_scenario.resolution + 1e-12

    def test_motion_through_obstacle_is_invalid(self, box_scenario):
        assert not motion_valid(box_scenario, as_config([0.5, 2.0]), as_config([3.5, 2.0]))
        assert motion_valid(box_scenario, as_config([0.5, 3.5]), as_config([3.5, 3.5]))

    def test_configuration_out_of_bounds_is_invalid(self, empty_scenario):
        assert not is_valid(empty_scenario, as_config([1.5, 0.5]))
        assert not motion_valid(empty_scenario, as_config([0.5, 0.5]), as_config([1.5, 0.5]))

    def test_zero_length_motion(self, empty_scenario):
        q = as_config([0.5, 0.5])
        assert motion_valid(empty_scenario, q, q)

    def test_finer_resolution_never_validates_a_rejected_motion(self, box_scenario):
        rng = np.random.default_rng(7)
        pairs = [as_config(q) for q in rng.uniform(0, 4, size=(200, 2))]
        coarse = dataclasses.replace(box_scenario, resolution=0.5)
        finer = [dataclasses.replace(coarse, resolution=0.5 / 2**k) for k in range(1, 4)]
        rejected = 0
        for a, b in zip(pairs[::2], pairs[1::2]):
            if motion_valid(coarse, a, b):
                continue
            rejected += 1
            assert not any(motion_valid(scenario, a, b) for scenario in finer)
        assert rejected > 0
