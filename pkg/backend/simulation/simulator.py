"""Synthetic field world: visibility, observation noise, pose sampling and trajectories."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from core.errors import LocalizationError, TrajectoryError
from core.field_map import (
    ADULT_FIELD_LENGTH,
    ADULT_FIELD_WIDTH,
    ADULT_PENALTY_AREA_HALF_WIDTH,
    ADULT_PENALTY_AREA_X,
    LANDMARK_CLASSES,
    FieldMap,
    LandmarkClass,
)
from core.fusion import ControlInput, RobotState, predict_state
from core.geometry import Point2, Pose2D, angle_difference, rotation_matrix

from .rng import STREAM_OBSERVATION, STREAM_ODOMETRY, STREAM_POSES, stream

LOGGER = logging.getLogger(__name__)

DEFAULT_FOV = math.radians(110.0)
DEFAULT_MAX_RANGE = 9.0
DEFAULT_TURN_RATE = math.pi / 2


@dataclass(frozen=True)
class SensorModel:
    fov: float = DEFAULT_FOV
    max_range: float = DEFAULT_MAX_RANGE
    misclassification_rate: float = 0.0
    obs_noise_width: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.fov <= 2 * math.pi:
            raise LocalizationError("fov must lie in (0, 2*pi]", fov=self.fov)
        if not self.max_range > 0:
            raise LocalizationError("max_range must be positive", max_range=self.max_range)
        if not 0.0 <= self.misclassification_rate <= 1.0:
            raise LocalizationError("misclassification_rate must lie in [0, 1]")
        if self.obs_noise_width < 0:
            raise LocalizationError("obs_noise_width must be non-negative")


@dataclass(frozen=True)
class SimObservation:
    """Body-frame observation with its reported class and the true landmark id."""

    point: Point2
    cls: LandmarkClass
    landmark_id: int

    def as_pair(self) -> Tuple[Point2, LandmarkClass]:
        return (self.point, self.cls)


def observation_pairs(observations: Sequence[SimObservation]) -> List[Tuple[Point2, LandmarkClass]]:
    return [o.as_pair() for o in observations]


def ground_truth(observations: Sequence[SimObservation]) -> frozenset[Tuple[int, int]]:
    """The ``(observation index, landmark id)`` set a correct matching must return."""

    return frozenset((i, o.landmark_id) for i, o in enumerate(observations))


def visible_landmarks(
    pose: Pose2D,
    field_map: FieldMap,
    sensor: SensorModel,
    seed: int = 0,
    frame: int = 0,
) -> List[SimObservation]:
    """Landmarks inside range and FOV, in body coordinates, in map order.

    Each landmark draws from its own ``(seed, frame, landmark id)`` stream:
    two uniform offsets, then the misclassification trial.
    """

    rel = field_map.positions - pose.translation
    body = rel @ rotation_matrix(pose.theta)
    ranges = np.hypot(body[:, 0], body[:, 1])
    bearings = np.arctan2(body[:, 1], body[:, 0])
    visible = (ranges <= sensor.max_range) & (np.abs(bearings) <= sensor.fov / 2 + 1e-12)

    out: List[SimObservation] = []
    for idx in np.flatnonzero(visible):
        landmark = field_map.landmarks[idx]
        rng = stream(seed, STREAM_OBSERVATION, frame, landmark.id)
        offset = rng.uniform(-1.0, 1.0, size=2) * sensor.obs_noise_width
        cls = landmark.cls
        if rng.random() < sensor.misclassification_rate:
            others = [c for c in LANDMARK_CLASSES if c is not cls]
            cls = others[int(rng.integers(len(others)))]
        out.append(SimObservation(Point2(body[idx, 0] + offset[0], body[idx, 1] + offset[1]), cls, landmark.id))
    return out


def sample_poses(n: int, field_map: FieldMap, seed: int = 0) -> List[Pose2D]:
    """``n`` poses uniform over the field rectangle and heading."""

    if n <= 0:
        return []
    rng = stream(seed, STREAM_POSES)
    half_l, half_w = field_map.field_length / 2, field_map.field_width / 2
    xs = rng.uniform(-half_l, half_l, size=n)
    ys = rng.uniform(-half_w, half_w, size=n)
    thetas = rng.uniform(-math.pi, math.pi, size=n)
    return [Pose2D(float(x), float(y), float(t)) for x, y, t in zip(xs, ys, thetas)]


# ----------------------------------------------------------------------
# trajectories


def default_waypoints(field_map: FieldMap) -> Tuple[Pose2D, ...]:
    """Closed rectangle on the penalty-area corners of the positive-x half."""

    x0 = ADULT_PENALTY_AREA_X * field_map.field_length / ADULT_FIELD_LENGTH
    x1 = field_map.field_length / 2
    y = ADULT_PENALTY_AREA_HALF_WIDTH * field_map.field_width / ADULT_FIELD_WIDTH
    corners = [(x0, -y), (x1, -y), (x1, y), (x0, y), (x0, -y)]
    return tuple(Pose2D(cx, cy, 0.0) for cx, cy in corners)


@dataclass(frozen=True)
class TrajectorySpec:
    waypoints: Tuple[Pose2D, ...]
    speed: float = 1.0
    dt: float = 0.01
    odom_pos_noise: float = 0.02
    odom_ang_noise: float = 0.02
    observation_stride: int = 1
    turn_rate: float = DEFAULT_TURN_RATE
    laps: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        if len(self.waypoints) < 2:
            raise TrajectoryError("a trajectory needs at least two waypoints", waypoints=len(self.waypoints))
        if not self.dt > 0 or not self.speed > 0 or not self.turn_rate > 0:
            raise TrajectoryError("dt, speed and turn_rate must be positive")
        if self.odom_pos_noise < 0 or self.odom_ang_noise < 0:
            raise TrajectoryError("odometry noise must be non-negative")
        if self.observation_stride < 1 or self.laps < 1:
            raise TrajectoryError("observation_stride and laps must be at least 1")


@dataclass(frozen=True)
class SimFrame:
    """One simulation step; ``control`` is the noisy input that led here."""

    index: int
    time: float
    true_pose: Pose2D
    observations: Tuple[SimObservation, ...]
    control: ControlInput
    true_control: ControlInput = field(default_factory=ControlInput)

    def observation_pairs(self) -> List[Tuple[Point2, LandmarkClass]]:
        return observation_pairs(self.observations)

    def ground_truth(self) -> frozenset[Tuple[int, int]]:
        return ground_truth(self.observations)


def _segment_controls(spec: TrajectorySpec, start_heading: float) -> List[ControlInput]:
    """Noise-free control sequence: turn in place, then drive straight, per segment."""

    heading = start_heading
    controls: List[ControlInput] = []
    points = list(spec.waypoints)
    if spec.laps > 1:
        loop = points[1:]
        for _ in range(spec.laps - 1):
            points.extend(loop)
    for a, b in zip(points[:-1], points[1:]):
        dx, dy = b.t_x - a.t_x, b.t_y - a.t_y
        length = math.hypot(dx, dy)
        target = math.atan2(dy, dx)
        turn = angle_difference(target, heading)
        if abs(turn) > 1e-12:
            steps = max(1, math.ceil(abs(turn) / (spec.turn_rate * spec.dt)))
            controls.extend([ControlInput(0.0, 0.0, turn / (steps * spec.dt))] * steps)
        heading = target
        steps = max(1, round(length / (spec.speed * spec.dt)))
        controls.extend([ControlInput(length / (steps * spec.dt), 0.0, 0.0)] * steps)
    return controls


def _noisy_control(u: ControlInput, spec: TrajectorySpec, seed: int, frame: int) -> ControlInput:
    rng = stream(seed, STREAM_ODOMETRY, frame)
    noise = rng.uniform(-1.0, 1.0, size=3)
    pos_bound = spec.odom_pos_noise / spec.dt
    ang_bound = spec.odom_ang_noise / spec.dt
    return ControlInput(u.v_f + noise[0] * pos_bound, u.v_s + noise[1] * pos_bound, u.omega + noise[2] * ang_bound)


def generate_trajectory(
    spec: TrajectorySpec,
    field_map: FieldMap,
    sensor: SensorModel | None = None,
    seed: int = 0,
) -> List[SimFrame]:
    """Drive the waypoint polygon at constant speed and record every step.

    The robot starts on the first waypoint facing the second, turns in place
    at each corner and integrates the noise-free controls for ground truth.
    """

    sensor = sensor or SensorModel()
    for idx, wp in enumerate(spec.waypoints):
        if not field_map.contains(wp.t_x, wp.t_y):
            raise TrajectoryError("waypoint outside the field", waypoint=idx, x=wp.t_x, y=wp.t_y)
    for idx, (a, b) in enumerate(zip(spec.waypoints[:-1], spec.waypoints[1:])):
        if math.hypot(b.t_x - a.t_x, b.t_y - a.t_y) <= 1e-9:
            raise TrajectoryError("zero-length trajectory segment", segment=idx)

    first, second = spec.waypoints[0], spec.waypoints[1]
    heading = math.atan2(second.t_y - first.t_y, second.t_x - first.t_x)
    controls = _segment_controls(spec, heading)

    state = RobotState(Pose2D(first.t_x, first.t_y, heading))
    frames = [
        SimFrame(
            0,
            0.0,
            state.pose,
            tuple(visible_landmarks(state.pose, field_map, sensor, seed, 0)),
            ControlInput(),
        )
    ]
    for k, u in enumerate(controls, start=1):
        state = predict_state(state, u, spec.dt)
        observations: Tuple[SimObservation, ...] = ()
        if k % spec.observation_stride == 0:
            observations = tuple(visible_landmarks(state.pose, field_map, sensor, seed, k))
        frames.append(
            SimFrame(k, k * spec.dt, state.pose, observations, _noisy_control(u, spec, seed, k), u)
        )
    LOGGER.debug("trajectory generated", extra={"frames": len(frames), "seed": seed})
    return frames


def dead_reckon(frames: Sequence[SimFrame], dt: float, start: Pose2D | None = None) -> List[Pose2D]:
    """Integrate the recorded controls from ``start`` (default: the first true pose)."""

    if not frames:
        return []
    state = RobotState(start or frames[0].true_pose)
    poses = [state.pose]
    for frame in frames[1:]:
        state = predict_state(state, frame.control, dt)
        poses.append(state.pose)
    return poses


__all__ = [
    "DEFAULT_FOV",
    "DEFAULT_MAX_RANGE",
    "SensorModel",
    "SimFrame",
    "SimObservation",
    "TrajectorySpec",
    "dead_reckon",
    "default_waypoints",
    "generate_trajectory",
    "ground_truth",
    "observation_pairs",
    "sample_poses",
    "visible_landmarks",
]
