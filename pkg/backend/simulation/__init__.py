"""Deterministic synthetic world used by every experiment."""

from .records import read_records, write_records
from .simulator import (
    SensorModel,
    SimFrame,
    SimObservation,
    TrajectorySpec,
    dead_reckon,
    default_waypoints,
    generate_trajectory,
    ground_truth,
    sample_poses,
    visible_landmarks,
)

__all__ = [
    "SensorModel",
    "SimFrame",
    "SimObservation",
    "TrajectorySpec",
    "dead_reckon",
    "default_waypoints",
    "generate_trajectory",
    "ground_truth",
    "read_records",
    "sample_poses",
    "visible_landmarks",
    "write_records",
]
