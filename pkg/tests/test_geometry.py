import math

import numpy as np
import pytest

from core.errors import LocalizationError
from core.geometry import (
    Point2,
    Pose2D,
    circular_mean,
    pose_error,
    transform_array,
    transform_to_body,
    transform_to_world,
    wrap_angle,
    wrap_angles,
)


def test_wrap_angle_range() -> None:
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi + 0.5) == pytest.approx(-math.pi + 0.5)
    assert wrap_angle(0.25) == pytest.approx(0.25)
    wrapped = wrap_angles(np.array([-math.pi, 2 * math.pi + 0.1, -0.1]))
    assert wrapped == pytest.approx([math.pi, 0.1, -0.1])


def test_pose_theta_is_wrapped() -> None:
    pose = Pose2D(1.0, 2.0, 2 * math.pi + 0.5)
    assert pose.theta == pytest.approx(0.5)


def test_non_finite_values_rejected() -> None:
    with pytest.raises(LocalizationError):
        Point2(float("nan"), 0.0)
    with pytest.raises(LocalizationError):
        Pose2D(0.0, float("inf"), 0.0)


def test_transform_to_world_known_values() -> None:
    pose = Pose2D(1.0, 2.0, math.pi / 2)
    (world,) = transform_to_world(pose, [Point2(1.0, 0.0)])
    assert world.x == pytest.approx(1.0)
    assert world.y == pytest.approx(3.0)


def test_body_transform_inverts_world_transform() -> None:
    pose = Pose2D(-3.2, 1.7, 2.4)
    pts = [Point2(0.5, -1.0), Point2(4.0, 2.0), Point2(-2.5, 0.0)]
    back = transform_to_body(pose, transform_to_world(pose, pts))
    for original, restored in zip(pts, back):
        assert restored.x == pytest.approx(original.x)
        assert restored.y == pytest.approx(original.y)


def test_empty_point_list() -> None:
    assert transform_to_world(Pose2D(1.0, 1.0, 1.0), []) == []
    assert transform_array(Pose2D(), np.zeros((0, 2))).shape == (0, 2)


def test_compose_with_inverse_is_identity() -> None:
    pose = Pose2D(2.0, -1.0, 0.7)
    identity = pose.compose(pose.inverse())
    assert identity.t_x == pytest.approx(0.0, abs=1e-12)
    assert identity.t_y == pytest.approx(0.0, abs=1e-12)
    assert identity.theta == pytest.approx(0.0, abs=1e-12)


def test_pose_error_wraps_heading() -> None:
    pos, ang = pose_error(Pose2D(0.0, 0.0, math.pi - 0.1), Pose2D(3.0, 4.0, -math.pi + 0.1))
    assert pos == pytest.approx(5.0)
    assert ang == pytest.approx(0.2)


def test_circular_mean_across_the_seam() -> None:
    mean = circular_mean(np.array([math.pi - 0.1, -math.pi + 0.1]))
    assert abs(mean) == pytest.approx(math.pi)
    weighted = circular_mean(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    assert weighted == pytest.approx(0.0)
