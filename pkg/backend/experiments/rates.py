"""Correct-matching rates against initial position and orientation offsets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from core.errors import LocalizationError
from core.field_map import FieldMap
from core.geometry import Pose2D
from core.registration import RegistrationConfig
from backend.simulation.rng import STREAM_EXPERIMENT, stream
from backend.simulation.simulator import SensorModel, SimObservation, ground_truth, sample_poses, visible_landmarks

from .heatmap import METHODS, register
from .outputs import Table
from .parallel import parallel_map

RATES_HEADER = ("method", "position_offset", "angle_offset_deg", "rate", "samples")


@dataclass(frozen=True)
class _Case:
    pose: Pose2D
    observations: Tuple[SimObservation, ...]
    direction: float
    turn_sign: float


def _cases(n_poses: int, field_map: FieldMap, sensor: SensorModel, seed: int) -> List[_Case]:
    poses = sample_poses(n_poses, field_map, seed)
    rng = stream(seed, STREAM_EXPERIMENT, 13)
    directions = rng.uniform(-math.pi, math.pi, size=len(poses))
    signs = np.where(rng.random(size=len(poses)) < 0.5, -1.0, 1.0)
    cases = []
    for idx, pose in enumerate(poses):
        obs = tuple(visible_landmarks(pose, field_map, sensor, seed, idx))
        if len(obs) >= 2:
            cases.append(_Case(pose, obs, float(directions[idx]), float(signs[idx])))
    return cases


def _is_correct(method: str, case: _Case, initial: Pose2D, field_map: FieldMap, cfg: RegistrationConfig) -> bool:
    try:
        result = register(method, case.observations, initial, field_map, cfg)
    except LocalizationError:
        return False
    return result.correspondence_set() == ground_truth(case.observations)


def matching_rate_surfaces(
    methods: Sequence[str],
    n_poses: int,
    init_offsets: Sequence[float],
    init_angle_offsets_deg: Sequence[float],
    field_map: FieldMap,
    sensor: SensorModel | None = None,
    seed: int = 0,
    *,
    cfg: RegistrationConfig | None = None,
    threads: int = 1,
) -> Table:
    """Rate of exactly correct correspondences per (position, angle) offset.

    Each sampled pose gets one fixed offset direction and turn sign, shared
    by every method and offset size, so rows differ only in the offset.
    """

    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown registration method {method!r}")
    sensor = sensor or SensorModel()
    cfg = cfg or RegistrationConfig()
    cases = _cases(n_poses, field_map, sensor, seed)
    table = Table(RATES_HEADER)
    for method in methods:
        for offset in init_offsets:
            for angle_deg in init_angle_offsets_deg:
                angle = math.radians(angle_deg)

                def run(case: _Case, offset: float = offset, angle: float = angle, method: str = method) -> bool:
                    initial = Pose2D(
                        case.pose.t_x + offset * math.cos(case.direction),
                        case.pose.t_y + offset * math.sin(case.direction),
                        case.pose.theta + case.turn_sign * angle,
                    )
                    return _is_correct(method, case, initial, field_map, cfg)

                hits = parallel_map(run, cases, threads)
                rate = sum(hits) / len(cases) if cases else 0.0
                table.add(method, float(offset), float(angle_deg), rate, len(cases))
    return table


def random_orientation_rate(
    method: str,
    reference: Pose2D,
    n_samples: int,
    field_map: FieldMap,
    sensor: SensorModel | None = None,
    seed: int = 0,
    *,
    cfg: RegistrationConfig | None = None,
    threads: int = 1,
) -> float:
    """Correct-matching rate at ``reference`` when only the heading guess is random."""

    cfg = cfg or RegistrationConfig()
    observations = tuple(visible_landmarks(reference, field_map, sensor or SensorModel(), seed, 0))
    if len(observations) < 2 or n_samples < 1:
        return 0.0
    headings = stream(seed, STREAM_EXPERIMENT, 17).uniform(-math.pi, math.pi, size=n_samples)
    case = _Case(reference, observations, 0.0, 1.0)
    hits = parallel_map(
        lambda theta: _is_correct(method, case, Pose2D(reference.t_x, reference.t_y, float(theta)), field_map, cfg),
        list(headings),
        threads,
    )
    return sum(hits) / n_samples


__all__ = ["RATES_HEADER", "matching_rate_surfaces", "random_orientation_rate"]
