"""Global initialization trials from the fixed hypothesis set at sampled poses."""

from __future__ import annotations

import math
from typing import Tuple

from core.errors import GlobalLocalizationError
from core.field_map import FieldMap
from core.geometry import pose_error
from core.registration import RegistrationConfig
from core.robustness import HypothesisSet, global_localize_detailed
from backend.simulation.simulator import SensorModel, sample_poses, visible_landmarks

from .outputs import Table
from .parallel import parallel_map

GLOBAL_HEADER = (
    "index",
    "true_x",
    "true_y",
    "true_theta",
    "est_x",
    "est_y",
    "est_theta",
    "hypothesis",
    "position_error",
    "orientation_error",
    "success",
)
SUCCESS_POSITION = 0.5
SUCCESS_ANGLE = 0.2


def global_init_trials(
    n_poses: int,
    field_map: FieldMap,
    sensor: SensorModel | None = None,
    seed: int = 0,
    hyp: HypothesisSet | None = None,
    cfg: RegistrationConfig | None = None,
    *,
    threads: int = 1,
) -> Table:
    """One single-frame global fix per sampled pose that sees enough landmarks.

    A fix counts as a success within 0.5 m and 0.2 rad of the true pose;
    rejected frames get an empty estimate and ``hypothesis`` -1.
    """

    sensor = sensor or SensorModel()
    hyp = hyp or HypothesisSet.for_map(field_map)
    poses = sample_poses(n_poses, field_map, seed)
    cases = []
    for idx, pose in enumerate(poses):
        obs = visible_landmarks(pose, field_map, sensor, seed, idx)
        if len(obs) >= hyp.min_landmarks:
            cases.append((idx, pose, [o.as_pair() for o in obs]))

    def run(case) -> Tuple[object, ...]:
        idx, pose, frame = case
        try:
            fix = global_localize_detailed([frame], field_map, hyp, cfg)
        except GlobalLocalizationError:
            nan = math.nan
            return (idx, *pose.as_tuple(), nan, nan, nan, -1, nan, nan, False)
        pos, ang = pose_error(fix.pose, pose)
        ok = pos < SUCCESS_POSITION and ang < SUCCESS_ANGLE
        return (idx, *pose.as_tuple(), *fix.pose.as_tuple(), fix.hypothesis_index, pos, ang, ok)

    table = Table(GLOBAL_HEADER)
    for row in parallel_map(run, cases, threads):
        table.add(*row)
    return table


def success_rate(table: Table) -> float:
    flags = table.column("success")
    return sum(bool(f) for f in flags) / len(flags) if flags else 0.0


__all__ = ["GLOBAL_HEADER", "global_init_trials", "success_rate"]
