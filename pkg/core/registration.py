"""Iterative landmark matching (ILM) and the nearest-neighbour ICP baseline."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .assignment import MatchStrategy, Matching, match_points
from .errors import InsufficientLandmarksError, LocalizationError
from .field_map import FieldMap, LandmarkClass
from .geometry import Point2, Pose2D, angle_difference, points_to_array, transform_array
from .pose_estimation import MIN_PAIRS, PointPairSet, PoseMethod, get_estimator, pairs_from_matching, residuals

LOGGER = logging.getLogger(__name__)

DEFAULT_MAX_ITERATION = 4

Observation = Tuple[Point2, LandmarkClass]


@dataclass(frozen=True)
class RegistrationConfig:
    max_iteration: int = DEFAULT_MAX_ITERATION
    convergence_tol_pos: float = 1e-6
    convergence_tol_ang: float = 1e-6
    estimator: PoseMethod = PoseMethod.KABSCH
    strategy: MatchStrategy = MatchStrategy.PARALLEL_BEST

    def __post_init__(self) -> None:
        if self.max_iteration < 1:
            raise LocalizationError("max_iteration must be at least 1", max_iteration=self.max_iteration)
        if self.convergence_tol_pos < 0 or self.convergence_tol_ang < 0:
            raise LocalizationError("convergence tolerances must be non-negative")
        object.__setattr__(self, "estimator", PoseMethod(self.estimator))
        object.__setattr__(self, "strategy", MatchStrategy(self.strategy))


@dataclass(frozen=True)
class IterationRecord:
    """Pose and matching quality after one match-and-estimate round."""

    iteration: int
    pose: Pose2D
    correspondences: frozenset[Tuple[int, int]]
    mean_matching_error: float

    def as_dict(self) -> Dict[str, object]:
        return {
            "iteration": self.iteration,
            **self.pose.as_dict(),
            "mean_matching_error": self.mean_matching_error,
        }


@dataclass(frozen=True)
class RegistrationResult:
    """Outcome of a registration run.

    ``mean_matching_error``/``max_matching_error`` are the distances between
    the observations projected with the final pose and their matched
    landmarks. ``dropped`` lists observation indices removed as outliers.
    """

    pose: Pose2D
    matching: Matching
    iterations: int
    converged: bool
    mean_matching_error: float
    max_matching_error: float
    history: Tuple[IterationRecord, ...] = field(default=())
    method: str = "ilm"
    low_confidence: bool = False
    dropped: Tuple[int, ...] = ()

    def correspondence_set(self) -> frozenset[Tuple[int, int]]:
        return self.matching.correspondence_set()

    def correspondences_at(self, budget: int) -> frozenset[Tuple[int, int]]:
        """Correspondences the run would have returned with ``max_iteration=budget``."""

        if not self.history:
            return self.correspondence_set()
        idx = min(max(budget, 1), len(self.history)) - 1
        return self.history[idx].correspondences

    def with_flags(self, **changes: object) -> "RegistrationResult":
        return replace(self, **changes)  # type: ignore[arg-type]

    def as_dict(self) -> Dict[str, object]:
        return {
            **self.pose.as_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "mean_matching_error": self.mean_matching_error,
            "max_matching_error": self.max_matching_error,
            "method": self.method,
            "low_confidence": self.low_confidence,
            "dropped": list(self.dropped),
            "matching": self.matching.as_dict(),
        }


def split_observations(obs_body: Sequence[Observation] | Sequence[Point2]) -> Tuple[np.ndarray, List[LandmarkClass]]:
    """Return body points as an array plus their classes (empty for bare points)."""

    if not obs_body:
        return np.zeros((0, 2)), []
    first = obs_body[0]
    if isinstance(first, Point2):
        return points_to_array(obs_body), []  # type: ignore[arg-type]
    points = points_to_array(p for p, _ in obs_body)  # type: ignore[misc]
    classes = [LandmarkClass.parse(c) for _, c in obs_body]  # type: ignore[misc]
    return points, classes


def pair_set(body: np.ndarray, matching: Matching, field_map: FieldMap) -> PointPairSet:
    return pairs_from_matching(body, matching.correspondences, field_map.positions, field_map.index_of)


def _pose_delta_within(a: Pose2D, b: Pose2D, cfg: RegistrationConfig) -> bool:
    moved = math.hypot(a.t_x - b.t_x, a.t_y - b.t_y)
    turned = abs(angle_difference(a.theta, b.theta))
    return moved <= cfg.convergence_tol_pos and turned <= cfg.convergence_tol_ang


def register_points(
    body: np.ndarray,
    classes: Sequence[LandmarkClass],
    initial: Pose2D,
    field_map: FieldMap,
    cfg: RegistrationConfig,
    *,
    strategy: MatchStrategy,
    method: str,
) -> RegistrationResult:
    """Alternate matching and pose estimation until the pose settles."""

    body = np.asarray(body, dtype=float).reshape(-1, 2)
    if body.shape[0] < MIN_PAIRS:
        raise InsufficientLandmarksError(
            f"registration needs at least {MIN_PAIRS} observations, got {body.shape[0]}",
            observations=int(body.shape[0]),
        )
    estimate = get_estimator(cfg.estimator)
    pose = initial
    history: List[IterationRecord] = []
    matching: Matching | None = None
    converged = False
    for iteration in range(1, cfg.max_iteration + 1):
        guess = transform_array(pose, body)
        matching = match_points(guess, classes, field_map, strategy)
        pairs = pair_set(body, matching, field_map)
        if len(pairs) < MIN_PAIRS:
            raise InsufficientLandmarksError(
                "too few matched observations to estimate a pose",
                matched=len(pairs),
                iteration=iteration,
            )
        new_pose = estimate(pairs).pose
        history.append(
            IterationRecord(iteration, new_pose, matching.correspondence_set(), matching.mean_error)
        )
        if LOGGER.isEnabledFor(logging.DEBUG):
            LOGGER.debug(
                "registration iteration",
                extra={"method": method, "iteration": iteration, "mean_error": matching.mean_error, **new_pose.as_dict()},
            )
        converged = _pose_delta_within(pose, new_pose, cfg)
        pose = new_pose
        if converged:
            break

    assert matching is not None
    final = residuals(pose, pair_set(body, matching, field_map))
    return RegistrationResult(
        pose=pose,
        matching=matching,
        iterations=len(history),
        converged=converged,
        mean_matching_error=float(final.mean()),
        max_matching_error=float(final.max()),
        history=tuple(history),
        method=method,
    )


def ilm_localize(
    obs_body: Sequence[Observation],
    initial: Pose2D,
    field_map: FieldMap,
    cfg: RegistrationConfig | None = None,
) -> RegistrationResult:
    """Iterative landmark matching from an initial pose guess.

    Each round projects the observations with the current pose, assigns them
    one-to-one to map landmarks and re-estimates the pose from the pairs.
    """

    cfg = cfg or RegistrationConfig()
    body, classes = split_observations(obs_body)
    if not classes and body.shape[0]:
        raise LocalizationError("ILM observations need landmark classes")
    return register_points(body, classes, initial, field_map, cfg, strategy=cfg.strategy, method="ilm")


def icp_localize(
    obs_body: Sequence[Point2] | Sequence[Observation],
    initial: Pose2D,
    field_map: FieldMap,
    cfg: RegistrationConfig | None = None,
) -> RegistrationResult:
    """Point-to-point ICP: class-agnostic nearest landmarks, Kabsch refit.

    Several observations may share one landmark.
    """

    cfg = cfg or RegistrationConfig()
    body, _ = split_observations(obs_body)
    icp_cfg = replace(cfg, estimator=PoseMethod.KABSCH)
    return register_points(body, [], initial, field_map, icp_cfg, strategy=MatchStrategy.NEAREST, method="icp")


__all__ = [
    "DEFAULT_MAX_ITERATION",
    "IterationRecord",
    "Observation",
    "RegistrationConfig",
    "RegistrationResult",
    "icp_localize",
    "ilm_localize",
    "pair_set",
    "register_points",
    "split_observations",
]
