"""Outlier dropping with RANSAC and multi-hypothesis global localization."""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .assignment import Matching, match_points
from .errors import (
    DegenerateGeometryError,
    GlobalLocalizationError,
    LocalizationError,
    RansacFailure,
)
from .field_map import FieldMap
from .geometry import Pose2D, transform_array
from .pose_estimation import MIN_PAIRS, PointPairSet, estimate_pose_kabsch, residuals
from .registration import (
    Observation,
    RegistrationConfig,
    RegistrationResult,
    ilm_localize,
    pair_set,
    split_observations,
)

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class OutlierConfig:
    error_threshold: float = 0.5
    min_landmarks: int = 6
    ransac_iterations: int = 50
    inlier_threshold: float = 0.3
    min_sample: int = 2

    def __post_init__(self) -> None:
        if self.error_threshold <= 0 or self.inlier_threshold <= 0:
            raise LocalizationError("outlier thresholds must be positive")
        if self.min_sample != 2:
            raise LocalizationError("RANSAC samples exactly two pairs", min_sample=self.min_sample)
        if self.ransac_iterations < 1 or self.min_landmarks < 1:
            raise LocalizationError("RANSAC iteration and landmark counts must be positive")


@dataclass(frozen=True)
class RansacResult:
    pose: Pose2D
    inlier_mask: np.ndarray
    inlier_rms: float
    candidates: int

    @property
    def inlier_count(self) -> int:
        return int(self.inlier_mask.sum())


def _canonical_order(pairs: PointPairSet) -> np.ndarray:
    keys = np.column_stack([pairs.body, pairs.world])
    return np.lexsort(keys.T[::-1])


def _candidate_samples(n: int, iterations: int, seed: int) -> List[Tuple[int, int]]:
    """2-subsets of canonical indices: exhaustive when few enough, else seeded draws."""

    if math.comb(n, 2) <= iterations:
        return list(itertools.combinations(range(n), 2))
    rng = np.random.default_rng(seed)
    samples: List[Tuple[int, int]] = []
    for _ in range(iterations):
        a, b = rng.choice(n, size=2, replace=False)
        samples.append((int(min(a, b)), int(max(a, b))))
    return samples


def ransac_pose_detailed(pairs: PointPairSet, cfg: OutlierConfig, seed: int = 0) -> RansacResult:
    n = len(pairs)
    if n < MIN_PAIRS:
        raise RansacFailure(f"RANSAC needs at least {MIN_PAIRS} pairs, got {n}", pairs=n)

    order = _canonical_order(pairs)
    canonical = pairs.subset(order)

    best_mask: np.ndarray | None = None
    best_count = 0
    best_rms = math.inf
    samples = _candidate_samples(n, cfg.ransac_iterations, seed)
    for sample in samples:
        try:
            model = estimate_pose_kabsch(canonical.subset(sample))
        except DegenerateGeometryError:
            continue
        dist = residuals(model.pose, canonical)
        mask = dist < cfg.inlier_threshold
        count = int(mask.sum())
        if count < MIN_PAIRS:
            continue
        rms = float(math.sqrt(np.mean(dist[mask] ** 2)))
        if count > best_count or (count == best_count and rms < best_rms):
            best_mask, best_count, best_rms = mask, count, rms

    if best_mask is None:
        raise RansacFailure("no consensus of at least two pairs", pairs=n, candidates=len(samples))

    refit = estimate_pose_kabsch(canonical.subset(np.flatnonzero(best_mask)))
    mask = np.zeros(n, dtype=bool)
    mask[order[best_mask]] = True
    LOGGER.debug("ransac consensus", extra={"pairs": n, "inliers": best_count, "candidates": len(samples)})
    return RansacResult(refit.pose, mask, refit.residual_rms, len(samples))


def ransac_pose(
    body_pts: np.ndarray,
    world_pts: np.ndarray,
    cfg: OutlierConfig | None = None,
    seed: int = 0,
) -> Tuple[Pose2D, np.ndarray]:
    """Largest-consensus rigid fit from two-pair samples, refit with Kabsch.

    Samples are drawn over a canonically sorted copy of the pairs, so the
    result does not depend on the input order.
    """

    result = ransac_pose_detailed(PointPairSet(body_pts, world_pts), cfg or OutlierConfig(), seed)
    return result.pose, result.inlier_mask


def _restricted_matching(matching: Matching, keep: Sequence[int], distances: np.ndarray) -> Matching:
    kept = set(int(i) for i in keep)
    correspondences = tuple(p for p in matching.correspondences if p[0] in kept)
    dist = tuple(float(d) for d in distances)
    dropped = tuple(sorted(set(matching.unmatched) | {o for o, _ in matching.correspondences if o not in kept}))
    return Matching(
        correspondences=correspondences,
        distances=dist,
        mean_error=float(np.mean(dist)) if dist else math.inf,
        max_error=float(np.max(dist)) if dist else math.inf,
        strategy_used=matching.strategy_used,
        unmatched=dropped,
        degraded_classes=matching.degraded_classes,
    )


def drop_outliers(
    obs_body: Sequence[Observation],
    result: RegistrationResult,
    field_map: FieldMap,
    cfg: OutlierConfig | None = None,
    reg_cfg: RegistrationConfig | None = None,
    seed: int = 0,
) -> RegistrationResult:
    """Re-estimate the pose without gross outliers when matching looks poor.

    Results with a mean matching error within ``error_threshold`` pass
    through. With fewer than ``min_landmarks`` observations the result is
    only flagged ``low_confidence``. The same flagged input comes back when
    re-matching keeps fewer than two inliers or would raise the mean error.
    """

    cfg = cfg or OutlierConfig()
    reg_cfg = reg_cfg or RegistrationConfig()
    if result.mean_matching_error <= cfg.error_threshold:
        return result
    body, classes = split_observations(obs_body)
    if body.shape[0] < cfg.min_landmarks:
        LOGGER.debug("too few landmarks for outlier dropping", extra={"observations": int(body.shape[0])})
        return result.with_flags(low_confidence=True)

    pairs = pair_set(body, result.matching, field_map)
    try:
        consensus = ransac_pose_detailed(pairs, cfg, seed)
    except RansacFailure:
        return result.with_flags(low_confidence=True)

    # re-match every observation at the consensus pose
    guess = transform_array(consensus.pose, body)
    rematch = match_points(guess, classes, field_map, reg_cfg.strategy)
    rematched_pairs = pair_set(body, rematch, field_map)
    dist = residuals(consensus.pose, rematched_pairs)
    keep_mask = dist < cfg.inlier_threshold
    if int(keep_mask.sum()) < MIN_PAIRS:
        LOGGER.debug("too few inliers after re-matching", extra={"inliers": int(keep_mask.sum())})
        return result.with_flags(low_confidence=True)
    kept_pairs = rematched_pairs.subset(np.flatnonzero(keep_mask))
    pose = estimate_pose_kabsch(kept_pairs).pose
    kept_obs = [rematch.correspondences[i][0] for i in np.flatnonzero(keep_mask)]
    final = residuals(pose, kept_pairs)
    if float(final.mean()) > result.mean_matching_error:
        return result.with_flags(low_confidence=True)
    matching = _restricted_matching(rematch, kept_obs, final)
    dropped = tuple(i for i in range(body.shape[0]) if i not in set(kept_obs))
    LOGGER.debug("outliers dropped", extra={"dropped": list(dropped)})
    return RegistrationResult(
        pose=pose,
        matching=matching,
        iterations=result.iterations,
        converged=result.converged,
        mean_matching_error=float(final.mean()),
        max_matching_error=float(final.max()),
        history=result.history,
        method=result.method,
        low_confidence=len(kept_obs) < cfg.min_landmarks,
        dropped=dropped,
    )


# ----------------------------------------------------------------------
# global localization


def default_hypotheses(field_map: FieldMap, count: int = 6) -> Tuple[Pose2D, ...]:
    """Poses evenly spaced along the own-half touch line, facing into the field."""

    half_l = field_map.field_length / 2
    y = -field_map.field_width / 2
    return tuple(Pose2D(-half_l * (k + 1) / (count + 1), y, math.pi / 2) for k in range(count))


@dataclass(frozen=True)
class HypothesisSet:
    poses: Tuple[Pose2D, ...]
    min_landmarks: int = 6
    max_error_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not self.poses:
            raise LocalizationError("hypothesis set is empty")
        object.__setattr__(self, "poses", tuple(self.poses))

    @classmethod
    def for_map(cls, field_map: FieldMap, count: int = 6, **kwargs: object) -> "HypothesisSet":
        return cls(default_hypotheses(field_map, count), **kwargs)  # type: ignore[arg-type]


@dataclass(frozen=True)
class GlobalFix:
    pose: Pose2D
    frame_index: int
    hypothesis_index: int
    result: RegistrationResult
    errors: Tuple[float, ...] = field(default=())

    def as_dict(self) -> Dict[str, object]:
        return {
            **self.pose.as_dict(),
            "frame_index": self.frame_index,
            "hypothesis_index": self.hypothesis_index,
            "mean_matching_error": self.result.mean_matching_error,
            "max_matching_error": self.result.max_matching_error,
        }


def _try_hypothesis(
    frame: Sequence[Observation], start: Pose2D, field_map: FieldMap, cfg: RegistrationConfig
) -> RegistrationResult | None:
    try:
        return ilm_localize(frame, start, field_map, cfg)
    except LocalizationError:
        return None


def global_localize_detailed(
    frames: Sequence[Sequence[Observation]],
    field_map: FieldMap,
    hyp: HypothesisSet | None = None,
    cfg: RegistrationConfig | None = None,
    *,
    max_workers: int = 1,
) -> GlobalFix:
    """Run ILM from every hypothesis on the first frame with enough landmarks.

    Results whose max matching error reaches ``max_error_threshold`` are
    discarded; the smallest mean error wins, ties go to the lower index.
    """

    hyp = hyp or HypothesisSet.for_map(field_map)
    cfg = cfg or RegistrationConfig()
    frame_index = next((i for i, f in enumerate(frames) if len(f) >= hyp.min_landmarks), None)
    if frame_index is None:
        raise GlobalLocalizationError(
            f"no frame with at least {hyp.min_landmarks} landmarks",
            frames=len(frames),
        )
    frame = frames[frame_index]

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda p: _try_hypothesis(frame, p, field_map, cfg), hyp.poses))
    else:
        results = [_try_hypothesis(frame, p, field_map, cfg) for p in hyp.poses]

    best: Tuple[float, int] | None = None
    errors: List[float] = []
    for idx, res in enumerate(results):
        if res is None:
            errors.append(math.inf)
            continue
        errors.append(res.mean_matching_error)
        if res.max_matching_error >= hyp.max_error_threshold:
            continue
        if best is None or res.mean_matching_error < best[0]:
            best = (res.mean_matching_error, idx)

    if best is None:
        raise GlobalLocalizationError(
            "every hypothesis exceeded the matching error threshold",
            frame_index=frame_index,
            threshold=hyp.max_error_threshold,
        )
    winner = results[best[1]]
    assert winner is not None
    return GlobalFix(winner.pose, frame_index, best[1], winner, tuple(errors))


def global_localize(
    frames: Sequence[Sequence[Observation]],
    field_map: FieldMap,
    hyp: HypothesisSet | None = None,
    cfg: RegistrationConfig | None = None,
    *,
    max_workers: int = 1,
) -> Pose2D:
    return global_localize_detailed(frames, field_map, hyp, cfg, max_workers=max_workers).pose


__all__ = [
    "GlobalFix",
    "HypothesisSet",
    "OutlierConfig",
    "RansacResult",
    "default_hypotheses",
    "drop_outliers",
    "global_localize",
    "global_localize_detailed",
    "ransac_pose",
    "ransac_pose_detailed",
]
