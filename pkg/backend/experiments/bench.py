"""Timing of the assignment solvers, the pose estimators and a full ILM call."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from core.assignment import (
    CostMatrix,
    distance_matrix,
    solve_lap_hungarian,
    solve_lap_jv,
    solve_lap_jv_modified,
)
from core.errors import AssignmentError, LocalizationError
from core.field_map import FieldMap
from core.geometry import Pose2D, points_to_array, transform_array
from core.pose_estimation import PointPairSet, estimate_pose_dlt, estimate_pose_kabsch
from core.registration import RegistrationConfig, ilm_localize
from backend.simulation.rng import STREAM_EXPERIMENT, stream
from backend.simulation.simulator import SensorModel, SimObservation, sample_poses, visible_landmarks

from .timing import BenchRecord, time_calls

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchInstance:
    pose: Pose2D
    observations: Tuple[SimObservation, ...]

    @property
    def body(self) -> np.ndarray:
        return points_to_array(o.point for o in self.observations)


def bench_instances(
    n_samples: int,
    field_map: FieldMap,
    sensor: SensorModel,
    seed: int,
    min_observations: int = 1,
) -> List[BenchInstance]:
    """Sampled poses with at least ``min_observations`` visible landmarks."""

    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    out: List[BenchInstance] = []
    batch = 0
    while len(out) < n_samples and batch < 16:
        poses = sample_poses(2 * n_samples, field_map, seed + batch)
        for idx, pose in enumerate(poses):
            obs = visible_landmarks(pose, field_map, sensor, seed, batch * 2 * n_samples + idx)
            if len(obs) >= min_observations:
                out.append(BenchInstance(pose, tuple(obs)))
                if len(out) == n_samples:
                    break
        batch += 1
    return out


def matching_cost(instance: BenchInstance, field_map: FieldMap) -> CostMatrix:
    """Observation-to-landmark distances with the observations placed at the true pose."""

    guess = transform_array(instance.pose, instance.body)
    entries = distance_matrix(guess, field_map.positions)
    return CostMatrix(entries, tuple(range(entries.shape[0])), tuple(int(i) for i in field_map.ids))


def bench_lap_solvers(
    n_samples: int,
    field_map: FieldMap,
    sensor: SensorModel,
    seed: int = 0,
    warmup: int = 10,
) -> List[BenchRecord]:
    """Time the three exact solvers on the same matching instances.

    Hungarian and classic JV get the zero-padded square matrix; the modified
    JV solver works on the rectangular one. Optimal costs must agree.
    """

    instances = bench_instances(n_samples, field_map, sensor, seed)
    rect = [matching_cost(inst, field_map) for inst in instances]
    square = [m.padded_square() for m in rect]

    hung, hung_out = time_calls("hungarian", solve_lap_hungarian, square, warmup)
    jv, jv_out = time_calls("jv", solve_lap_jv, square, warmup)
    mod, mod_out = time_calls("jv_modified", solve_lap_jv_modified, rect, warmup)

    for idx, (a, b, c) in enumerate(zip(hung_out, jv_out, mod_out)):
        costs = (a.total_cost, b.total_cost, c.total_cost)
        if max(costs) - min(costs) > 1e-9 * max(1.0, max(costs)):
            raise AssignmentError("solvers disagree on the optimal cost", instance=idx, costs=list(costs))
    LOGGER.debug("lap solvers agree", extra={"instances": len(instances)})
    return [hung, jv, mod]


def _ground_truth_pairs(instance: BenchInstance, field_map: FieldMap) -> PointPairSet:
    rows = [field_map.index_of[o.landmark_id] for o in instance.observations]
    return PointPairSet(instance.body, field_map.positions[rows])


def bench_estimators(
    n_samples: int,
    field_map: FieldMap,
    sensor: SensorModel,
    seed: int = 0,
    warmup: int = 10,
) -> List[BenchRecord]:
    """Time DLT and Kabsch on identical ground-truth pair sets."""

    instances = bench_instances(n_samples, field_map, sensor, seed, min_observations=2)
    pairs = [_ground_truth_pairs(inst, field_map) for inst in instances]
    dlt, dlt_out = time_calls("dlt", estimate_pose_dlt, pairs, warmup)
    kabsch, kabsch_out = time_calls("kabsch", estimate_pose_kabsch, pairs, warmup)
    if sensor.obs_noise_width == 0:
        for inst, a, b in zip(instances, dlt_out, kabsch_out):
            for est in (a, b):
                if math.hypot(est.pose.t_x - inst.pose.t_x, est.pose.t_y - inst.pose.t_y) > 1e-6:
                    raise LocalizationError("noise-free estimate strayed from the true pose", method=est.method.value)
    return [dlt, kabsch]


def _perturbed_starts(instances: Sequence[BenchInstance], seed: int) -> List[Pose2D]:
    rng = stream(seed, STREAM_EXPERIMENT, 7)
    offsets = rng.uniform(-1.0, 1.0, size=(len(instances), 3)) * np.array([0.3, 0.3, 0.1])
    return [
        Pose2D(inst.pose.t_x + dx, inst.pose.t_y + dy, inst.pose.theta + dt)
        for inst, (dx, dy, dt) in zip(instances, offsets)
    ]


def bench_ilm(
    n_samples: int,
    field_map: FieldMap,
    sensor: SensorModel,
    seed: int = 0,
    warmup: int = 10,
    max_iteration: int = 4,
) -> List[BenchRecord]:
    """Time ``ilm_localize`` with each estimator from slightly perturbed starts."""

    instances = bench_instances(n_samples, field_map, sensor, seed, min_observations=2)
    starts = _perturbed_starts(instances, seed)
    jobs = [([o.as_pair() for o in inst.observations], start) for inst, start in zip(instances, starts)]
    records: List[BenchRecord] = []
    for estimator in ("dlt", "kabsch"):
        cfg = RegistrationConfig(max_iteration=max_iteration, estimator=estimator)  # type: ignore[arg-type]

        def run(job: Tuple[list, Pose2D], cfg: RegistrationConfig = cfg):
            try:
                return ilm_localize(job[0], job[1], field_map, cfg)
            except LocalizationError:
                return None

        record, _ = time_calls(f"ilm_{estimator}", run, jobs, warmup)
        records.append(record)
    return records


__all__ = [
    "BenchInstance",
    "bench_estimators",
    "bench_ilm",
    "bench_instances",
    "bench_lap_solvers",
    "matching_cost",
]
