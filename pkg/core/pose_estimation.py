"""Closed-form rigid pose estimation from body/world point pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from .errors import DegenerateGeometryError, InsufficientLandmarksError
from .geometry import Point2, Pose2D, points_to_array, transform_array

MIN_PAIRS = 2
DEGENERATE_SPREAD = 1e-9


class PoseMethod(str, Enum):
    DLT = "dlt"
    KABSCH = "kabsch"


@dataclass(frozen=True)
class PointPairSet:
    """Ordered body-frame points and their world-frame counterparts."""

    body: np.ndarray
    world: np.ndarray

    def __post_init__(self) -> None:
        body = np.asarray(self.body, dtype=float).reshape(-1, 2)
        world = np.asarray(self.world, dtype=float).reshape(-1, 2)
        if body.shape != world.shape:
            raise InsufficientLandmarksError(
                "body and world point lists differ in length",
                body=body.shape[0],
                world=world.shape[0],
            )
        object.__setattr__(self, "body", body)
        object.__setattr__(self, "world", world)

    @classmethod
    def from_points(cls, body: Sequence[Point2], world: Sequence[Point2]) -> "PointPairSet":
        return cls(points_to_array(body), points_to_array(world))

    def __len__(self) -> int:
        return int(self.body.shape[0])

    def subset(self, indices: Sequence[int]) -> "PointPairSet":
        idx = np.asarray(indices, dtype=int)
        return PointPairSet(self.body[idx], self.world[idx])


@dataclass(frozen=True)
class PoseEstimate:
    pose: Pose2D
    residual_rms: float
    method: PoseMethod

    def as_dict(self) -> Dict[str, object]:
        return {**self.pose.as_dict(), "residual_rms": self.residual_rms, "method": self.method.value}


def residuals(pose: Pose2D, pairs: PointPairSet) -> np.ndarray:
    """Per-pair distance between the transformed body point and its world point."""

    diff = transform_array(pose, pairs.body) - pairs.world
    return np.hypot(diff[:, 0], diff[:, 1])


def _residual_rms(pose: Pose2D, pairs: PointPairSet) -> float:
    res = residuals(pose, pairs)
    return float(math.sqrt(np.mean(res**2))) if res.size else 0.0


def _check_pairs(pairs: PointPairSet) -> None:
    if len(pairs) < MIN_PAIRS:
        raise InsufficientLandmarksError(
            f"pose estimation needs at least {MIN_PAIRS} point pairs, got {len(pairs)}",
            pairs=len(pairs),
        )
    spread = np.ptp(pairs.body, axis=0)
    if float(np.max(spread)) <= DEGENERATE_SPREAD:
        raise DegenerateGeometryError("body points coincide", pairs=len(pairs))
    spread = np.ptp(pairs.world, axis=0)
    if float(np.max(spread)) <= DEGENERATE_SPREAD:
        raise DegenerateGeometryError("world points coincide", pairs=len(pairs))


def estimate_pose_dlt(pairs: PointPairSet) -> PoseEstimate:
    """Linear least squares for ``(a, b, t_x, t_y)`` with ``a = cos``, ``b = sin``.

    The rotation is recovered as ``atan2(b, a)``; the scale ``|(a, b)|`` is
    left free by the linear system and discarded.
    """

    _check_pairs(pairs)
    xb, yb = pairs.body[:, 0], pairs.body[:, 1]
    ones, zeros = np.ones_like(xb), np.zeros_like(xb)
    design = np.empty((2 * len(pairs), 4))
    design[0::2] = np.column_stack([xb, -yb, ones, zeros])
    design[1::2] = np.column_stack([yb, xb, zeros, ones])
    target = pairs.world.reshape(-1)

    solution, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < 4:
        raise DegenerateGeometryError("point pairs do not constrain the transform", rank=int(rank))
    a, b, t_x, t_y = (float(v) for v in solution)
    if math.hypot(a, b) <= DEGENERATE_SPREAD:
        raise DegenerateGeometryError("rotation block vanished", a=a, b=b)
    pose = Pose2D(t_x, t_y, math.atan2(b, a))
    return PoseEstimate(pose, _residual_rms(pose, pairs), PoseMethod.DLT)


def estimate_pose_kabsch(pairs: PointPairSet) -> PoseEstimate:
    """SVD of the centred cross-covariance, constrained to a proper rotation."""

    _check_pairs(pairs)
    mu_b = pairs.body.mean(axis=0)
    mu_w = pairs.world.mean(axis=0)
    qb = pairs.body - mu_b
    qw = pairs.world - mu_w

    h = qb.T @ qw
    u, _, vt = np.linalg.svd(h)
    v = vt.T
    rotation = v @ u.T
    if np.linalg.det(rotation) < 0:
        v[:, 1] *= -1
        rotation = v @ u.T

    translation = mu_w - rotation @ mu_b
    theta = math.atan2(rotation[1, 0], rotation[0, 0])
    pose = Pose2D(float(translation[0]), float(translation[1]), theta)
    return PoseEstimate(pose, _residual_rms(pose, pairs), PoseMethod.KABSCH)


PoseEstimator = Callable[[PointPairSet], PoseEstimate]

ESTIMATORS: Dict[PoseMethod, PoseEstimator] = {
    PoseMethod.DLT: estimate_pose_dlt,
    PoseMethod.KABSCH: estimate_pose_kabsch,
}


def get_estimator(method: "PoseMethod | str") -> PoseEstimator:
    return ESTIMATORS[PoseMethod(method)]


def pairs_from_matching(
    body_points: np.ndarray,
    correspondences: Sequence[Tuple[int, int]],
    landmark_positions: Dict[int, Tuple[float, float]] | np.ndarray,
    index_of: Dict[int, int] | None = None,
) -> PointPairSet:
    """Build pairs from ``(observation index, landmark id)`` correspondences."""

    body = np.asarray(body_points, dtype=float).reshape(-1, 2)
    if not correspondences:
        return PointPairSet(np.zeros((0, 2)), np.zeros((0, 2)))
    obs_idx = np.array([obs for obs, _ in correspondences], dtype=int)
    if index_of is not None:
        rows = np.array([index_of[lm] for _, lm in correspondences], dtype=int)
        world = np.asarray(landmark_positions)[rows]
    else:
        world = np.array([landmark_positions[lm] for _, lm in correspondences], dtype=float)  # type: ignore[index]
    return PointPairSet(body[obs_idx], world)


__all__ = [
    "ESTIMATORS",
    "PointPairSet",
    "PoseEstimate",
    "PoseMethod",
    "estimate_pose_dlt",
    "estimate_pose_kabsch",
    "get_estimator",
    "pairs_from_matching",
    "residuals",
]
