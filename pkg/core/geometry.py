"""Planar rigid-body helpers: poses, rotations, frame transforms and pose errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import LocalizationError

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Return ``theta`` wrapped into (-pi, pi]."""

    wrapped = math.remainder(float(theta), TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    """Vectorised :func:`wrap_angle`."""

    wrapped = np.remainder(np.asarray(theta, dtype=float) + math.pi, TWO_PI) - math.pi
    return np.where(wrapped <= -math.pi, wrapped + TWO_PI, wrapped)


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise LocalizationError(f"{name} must be finite", **{name: value})


@dataclass(frozen=True)
class Point2:
    """A 2D point in meters, frame given by context."""

    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        _require_finite(x=self.x, y=self.y)

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Pose2D:
    """Planar pose ``(t_x, t_y, theta)``; theta is stored wrapped to (-pi, pi]."""

    t_x: float = 0.0
    t_y: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_x", float(self.t_x))
        object.__setattr__(self, "t_y", float(self.t_y))
        _require_finite(t_x=self.t_x, t_y=self.t_y, theta=float(self.theta))
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.t_x, self.t_y])

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.t_x, self.t_y, self.theta)

    def as_array(self) -> np.ndarray:
        return np.array([self.t_x, self.t_y, self.theta])

    def as_dict(self) -> dict[str, float]:
        return {"t_x": self.t_x, "t_y": self.t_y, "theta": self.theta}

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "Pose2D":
        return cls(float(values[0]), float(values[1]), float(values[2]))

    def inverse(self) -> "Pose2D":
        """Return the pose mapping world coordinates back into this body frame."""

        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            -(c * self.t_x + s * self.t_y),
            -(-s * self.t_x + c * self.t_y),
            -self.theta,
        )

    def compose(self, other: "Pose2D") -> "Pose2D":
        """Return ``self ∘ other`` (apply ``other`` first, then ``self``)."""

        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.t_x + c * other.t_x - s * other.t_y,
            self.t_y + s * other.t_x + c * other.t_y,
            self.theta + other.theta,
        )


def rotation_matrix(theta: float) -> np.ndarray:
    """Return the 2x2 rotation matrix ``R(theta)``."""

    _require_finite(theta=float(theta))
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def points_to_array(pts: Iterable[Point2]) -> np.ndarray:
    """Stack points into an ``(n, 2)`` array (``(0, 2)`` when empty)."""

    rows = [(p.x, p.y) for p in pts]
    if not rows:
        return np.zeros((0, 2))
    return np.asarray(rows, dtype=float)


def array_to_points(arr: np.ndarray) -> List[Point2]:
    return [Point2(float(x), float(y)) for x, y in np.asarray(arr, dtype=float).reshape(-1, 2)]


def transform_array(pose: Pose2D, arr: np.ndarray) -> np.ndarray:
    """Map an ``(n, 2)`` array of body-frame points into the world frame."""

    pts = np.asarray(arr, dtype=float).reshape(-1, 2)
    return pts @ rotation_matrix(pose.theta).T + pose.translation


def transform_to_world(pose: Pose2D, pts: Sequence[Point2]) -> List[Point2]:
    """Apply ``p_world = R(theta) p_body + t`` element-wise, preserving order."""

    if not pts:
        return []
    return array_to_points(transform_array(pose, points_to_array(pts)))


def transform_to_body(pose: Pose2D, pts: Sequence[Point2]) -> List[Point2]:
    """Inverse of :func:`transform_to_world`."""

    return transform_to_world(pose.inverse(), pts)


def angle_difference(a: float, b: float) -> float:
    """Signed wrapped difference ``a - b`` in (-pi, pi]."""

    return wrap_angle(a - b)


def pose_error(a: Pose2D, b: Pose2D) -> Tuple[float, float]:
    """Return ``(position_error, orientation_error)`` between two poses.

    The orientation component is the absolute wrapped difference in [0, pi].
    """

    position_error = math.hypot(a.t_x - b.t_x, a.t_y - b.t_y)
    orientation_error = abs(angle_difference(a.theta, b.theta))
    return position_error, orientation_error


def circular_mean(angles: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Weighted circular mean via ``atan2`` of the weighted sine/cosine sums."""

    angles = np.asarray(angles, dtype=float)
    if weights is None:
        weights = np.full(angles.shape, 1.0 / max(angles.size, 1))
    s = float(np.dot(weights, np.sin(angles)))
    c = float(np.dot(weights, np.cos(angles)))
    return wrap_angle(math.atan2(s, c))


__all__ = [
    "Point2",
    "Pose2D",
    "angle_difference",
    "array_to_points",
    "circular_mean",
    "points_to_array",
    "pose_error",
    "rotation_matrix",
    "transform_array",
    "transform_to_body",
    "transform_to_world",
    "wrap_angle",
    "wrap_angles",
]
