"""DLT versus Kabsch accuracy under growing observation noise."""

from __future__ import annotations

from dataclasses import replace
from typing import Dict, List, Sequence

import numpy as np

from core.field_map import FieldMap
from core.geometry import pose_error
from core.pose_estimation import ESTIMATORS, PointPairSet, PoseMethod
from backend.simulation.rng import STREAM_EXPERIMENT, stream
from backend.simulation.simulator import SensorModel

from .bench import bench_instances
from .outputs import Table

NOISE_HEADER = ("noise_width", "method", "mean_position_error", "mean_orientation_error", "samples")


def sweep_pose_noise(
    noise_widths: Sequence[float],
    n_poses: int,
    field_map: FieldMap,
    sensor: SensorModel | None = None,
    seed: int = 0,
) -> Table:
    """Mean pose error of each estimator per uniform noise width.

    Correspondences are the ground truth, so only estimator error is measured.
    """

    sensor = replace(sensor or SensorModel(), obs_noise_width=0.0, misclassification_rate=0.0)
    instances = bench_instances(n_poses, field_map, sensor, seed, min_observations=2)
    table = Table(NOISE_HEADER)
    for w_idx, width in enumerate(noise_widths):
        rng = stream(seed, STREAM_EXPERIMENT, 11, w_idx)
        errors: Dict[PoseMethod, List[tuple[float, float]]] = {m: [] for m in ESTIMATORS}
        for inst in instances:
            body = inst.body + rng.uniform(-1.0, 1.0, size=inst.body.shape) * width
            rows = [field_map.index_of[o.landmark_id] for o in inst.observations]
            pairs = PointPairSet(body, field_map.positions[rows])
            for method, estimate in ESTIMATORS.items():
                errors[method].append(pose_error(estimate(pairs).pose, inst.pose))
        for method in ESTIMATORS:
            arr = np.asarray(errors[method])
            table.add(float(width), method.value, float(arr[:, 0].mean()), float(arr[:, 1].mean()), len(instances))
    return table


__all__ = ["NOISE_HEADER", "sweep_pose_noise"]
