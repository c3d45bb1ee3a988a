import math

import numpy as np
import pytest

from core.errors import LocalizationError, TrajectoryError
from core.field_map import LandmarkClass
from core.geometry import Pose2D, pose_error
from backend.simulation.rng import stream
from backend.simulation.simulator import (
    SensorModel,
    TrajectorySpec,
    dead_reckon,
    default_waypoints,
    generate_trajectory,
    sample_poses,
)

from conftest import REFERENCE_POSE


def test_reference_view_in_map_order(observe) -> None:
    obs = observe()
    assert [o.landmark_id for o in obs] == [0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 23, 27, 29]
    assert all(o.point.x > 0 for o in obs)


def test_observation_is_body_frame(default_map, observe) -> None:
    (first, *_) = observe()
    landmark = default_map.landmark(first.landmark_id)
    assert first.point.x == pytest.approx(landmark.position.x - REFERENCE_POSE.t_x)
    assert first.point.y == pytest.approx(landmark.position.y - REFERENCE_POSE.t_y)


def test_field_of_view_and_range(observe) -> None:
    narrow = observe(sensor=SensorModel(fov=math.radians(10.0)))
    assert len(narrow) < len(observe())
    short = observe(sensor=SensorModel(max_range=1.0))
    assert short == []


def test_noise_is_bounded_and_reproducible(observe) -> None:
    clean = observe()
    sensor = SensorModel(obs_noise_width=0.2)
    noisy = observe(sensor=sensor, seed=3, frame=7)
    for a, b in zip(clean, noisy):
        assert abs(a.point.x - b.point.x) <= 0.2
        assert abs(a.point.y - b.point.y) <= 0.2
    assert observe(sensor=sensor, seed=3, frame=7) == noisy
    assert observe(sensor=sensor, seed=3, frame=8) != noisy


def test_misclassification_always_changes_class(default_map, observe) -> None:
    for obs in observe(sensor=SensorModel(misclassification_rate=1.0)):
        assert obs.cls is not default_map.landmark(obs.landmark_id).cls
        assert isinstance(obs.cls, LandmarkClass)


def test_sensor_validation() -> None:
    with pytest.raises(LocalizationError):
        SensorModel(fov=0.0)
    with pytest.raises(LocalizationError):
        SensorModel(misclassification_rate=1.5)


def test_sample_poses(default_map) -> None:
    poses = sample_poses(50, default_map, seed=4)
    assert len(poses) == 50
    assert all(default_map.contains(p.t_x, p.t_y, margin=0.0) for p in poses)
    assert sample_poses(50, default_map, seed=4) == poses
    assert sample_poses(0, default_map) == []


def test_streams_are_independent() -> None:
    a = stream(1, 2, 3).random(4)
    assert np.array_equal(a, stream(1, 2, 3).random(4))
    assert not np.array_equal(a, stream(1, 2, 4).random(4))
    with pytest.raises(ValueError):
        stream(-1)


def test_noise_free_trajectory_closes_the_loop(default_map) -> None:
    spec = TrajectorySpec(default_waypoints(default_map), dt=0.05, odom_pos_noise=0.0, odom_ang_noise=0.0)
    frames = generate_trajectory(spec, default_map)
    start = spec.waypoints[0]
    assert frames[0].true_pose.t_x == pytest.approx(start.t_x)
    assert frames[-1].true_pose.t_x == pytest.approx(start.t_x, abs=1e-9)
    assert frames[-1].true_pose.t_y == pytest.approx(start.t_y, abs=1e-9)
    assert [f.index for f in frames] == list(range(len(frames)))

    replayed = dead_reckon(frames, spec.dt)
    pos, ang = pose_error(replayed[-1], frames[-1].true_pose)
    assert pos == pytest.approx(0.0, abs=1e-9)
    assert ang == pytest.approx(0.0, abs=1e-9)


def test_odometry_noise_makes_dead_reckoning_drift(default_map) -> None:
    spec = TrajectorySpec(default_waypoints(default_map), dt=0.05)
    frames = generate_trajectory(spec, default_map, seed=2)
    assert generate_trajectory(spec, default_map, seed=2) == frames
    pos, _ = pose_error(dead_reckon(frames, spec.dt)[-1], frames[-1].true_pose)
    assert pos > 0


def test_observation_stride(default_map) -> None:
    spec = TrajectorySpec(default_waypoints(default_map), dt=0.05, observation_stride=2)
    frames = generate_trajectory(spec, default_map)
    assert all(not f.observations for f in frames[1::2])
    assert frames[2].observations


def test_trajectory_errors(default_map) -> None:
    with pytest.raises(TrajectoryError):
        TrajectorySpec((Pose2D(),))
    with pytest.raises(TrajectoryError):
        generate_trajectory(TrajectorySpec((Pose2D(), Pose2D(20.0, 0.0, 0.0))), default_map)
    with pytest.raises(TrajectoryError):
        generate_trajectory(TrajectorySpec((Pose2D(), Pose2D(), Pose2D(1.0, 0.0, 0.0))), default_map)
    with pytest.raises(TrajectoryError):
        TrajectorySpec((Pose2D(), Pose2D(1.0, 0.0, 0.0)), dt=0.0)
