"""Run configuration: pydantic schemas merged from a JSON file and command-line flags."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.assignment import MatchStrategy
from core.field_map import FieldMap
from core.fusion import NoiseModel
from core.geometry import Pose2D
from core.pose_estimation import PoseMethod
from core.registration import RegistrationConfig
from core.robustness import HypothesisSet, OutlierConfig

from .experiments.amcl import AmclConfig
from .simulation.simulator import SensorModel, TrajectorySpec, default_waypoints

Triple = Tuple[float, float, float]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SensorSettings(StrictModel):
    fov_deg: float = Field(110.0, gt=0, le=360)
    max_range: float = Field(9.0, gt=0)
    misclassification_rate: float = Field(0.0, ge=0, le=1)
    obs_noise_width: float = Field(0.0, ge=0)

    def to_model(self) -> SensorModel:
        return SensorModel(
            fov=math.radians(self.fov_deg),
            max_range=self.max_range,
            misclassification_rate=self.misclassification_rate,
            obs_noise_width=self.obs_noise_width,
        )


class RegistrationSettings(StrictModel):
    max_iteration: int = Field(4, ge=1)
    convergence_tol_pos: float = Field(1e-6, ge=0)
    convergence_tol_ang: float = Field(1e-6, ge=0)
    estimator: PoseMethod = PoseMethod.KABSCH
    strategy: MatchStrategy = MatchStrategy.PARALLEL_BEST

    @model_validator(mode="after")
    def _matching_strategy(self) -> "RegistrationSettings":
        if self.strategy is MatchStrategy.NEAREST:
            raise ValueError("nearest-neighbour matching is reserved for the ICP baseline")
        return self

    def to_model(self) -> RegistrationConfig:
        return RegistrationConfig(**self.model_dump())


class OutlierSettings(StrictModel):
    error_threshold: float = Field(0.5, gt=0)
    min_landmarks: int = Field(6, ge=1)
    ransac_iterations: int = Field(50, ge=1)
    inlier_threshold: float = Field(0.3, gt=0)

    def to_model(self) -> OutlierConfig:
        return OutlierConfig(**self.model_dump())


class HypothesisSettings(StrictModel):
    poses: List[Triple] | None = None
    count: int = Field(6, ge=1)
    min_landmarks: int = Field(6, ge=1)
    max_error_threshold: float = Field(0.5, gt=0)

    def to_model(self, field_map: FieldMap) -> HypothesisSet:
        if self.poses:
            return HypothesisSet(
                tuple(Pose2D(*p) for p in self.poses),
                min_landmarks=self.min_landmarks,
                max_error_threshold=self.max_error_threshold,
            )
        return HypothesisSet.for_map(
            field_map,
            self.count,
            min_landmarks=self.min_landmarks,
            max_error_threshold=self.max_error_threshold,
        )


class FilterSettings(StrictModel):
    particles: int = Field(100, ge=1)
    process_std: Triple = (0.02, 0.02, 0.02)
    measurement_std: Triple = (0.3, 0.3, 0.1)
    initial_std: Triple = (0.05, 0.05, 0.02)

    @model_validator(mode="after")
    def _non_negative(self) -> "FilterSettings":
        for name in ("process_std", "measurement_std", "initial_std"):
            if any(v < 0 for v in getattr(self, name)):
                raise ValueError(f"{name} entries must be non-negative")
        return self

    def to_model(self) -> NoiseModel:
        return NoiseModel(process_std=self.process_std, measurement_std=self.measurement_std)


class AmclSettings(StrictModel):
    particles: int = Field(200, ge=1)
    alpha_slow: float = Field(0.001, ge=0)
    alpha_fast: float = Field(0.1, ge=0)
    likelihood_std: float = Field(0.5, gt=0)
    process_std: Triple = (0.02, 0.02, 0.02)

    @model_validator(mode="after")
    def _rates_ordered(self) -> "AmclSettings":
        if not self.alpha_slow < self.alpha_fast:
            raise ValueError("alpha_slow must be smaller than alpha_fast")
        return self

    def to_model(self) -> AmclConfig:
        return AmclConfig(**self.model_dump())


class TrajectorySettings(StrictModel):
    waypoints: List[Tuple[float, float]] | None = None
    speed: float = Field(1.0, gt=0)
    dt: float = Field(0.01, gt=0)
    odom_pos_noise: float = Field(0.02, ge=0)
    odom_ang_noise: float = Field(0.02, ge=0)
    obs_noise_width: float = Field(0.5, ge=0)
    observation_stride: int = Field(1, ge=1)
    laps: int = Field(1, ge=1)

    def to_model(self, field_map: FieldMap) -> TrajectorySpec:
        if self.waypoints:
            waypoints = tuple(Pose2D(x, y, 0.0) for x, y in self.waypoints)
        else:
            waypoints = default_waypoints(field_map)
        return TrajectorySpec(
            waypoints=waypoints,
            speed=self.speed,
            dt=self.dt,
            odom_pos_noise=self.odom_pos_noise,
            odom_ang_noise=self.odom_ang_noise,
            observation_stride=self.observation_stride,
            laps=self.laps,
        )


DESK_SAMPLES = 10_000
FULL_SCALE_SAMPLES = 100_000


class ExperimentSettings(StrictModel):
    samples: int = Field(DESK_SAMPLES, ge=1)
    warmup: int = Field(10, ge=0)
    grid_resolution: float = Field(0.25, gt=0)
    heatmap_true_pose: Triple = (1.0, 1.0, 0.0)
    heatmap_budgets: List[int] = Field(default_factory=lambda: list(range(1, 9)))
    heatmap_noise: bool = False
    noise_widths: List[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    rate_position_offsets: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 3.0])
    rate_angle_offsets_deg: List[float] = Field(default_factory=lambda: [0.0, 30.0, 60.0, 90.0, 180.0])
    rate_reference_pose: Triple = (1.0, 1.0, 0.0)
    misclassification_rates: List[float] = Field(default_factory=lambda: [0.0, 0.05, 0.1, 0.2])
    global_init: bool = False

    @model_validator(mode="after")
    def _lists(self) -> "ExperimentSettings":
        if not self.heatmap_budgets or any(b < 1 for b in self.heatmap_budgets):
            raise ValueError("heatmap_budgets must be positive iteration counts")
        if any(w < 0 for w in self.noise_widths):
            raise ValueError("noise_widths must be non-negative")
        if any(r < 0 or r > 1 for r in self.misclassification_rates):
            raise ValueError("misclassification_rates must lie in [0, 1]")
        return self


class RunConfig(StrictModel):
    """Everything a run depends on; archived next to its outputs."""

    map_path: str | None = None
    seed: int = Field(0, ge=0)
    output_dir: str = "results"
    threads: int = Field(1, ge=1)
    sensor: SensorSettings = Field(default_factory=SensorSettings)
    registration: RegistrationSettings = Field(default_factory=RegistrationSettings)
    outliers: OutlierSettings = Field(default_factory=OutlierSettings)
    hypotheses: HypothesisSettings = Field(default_factory=HypothesisSettings)
    filter: FilterSettings = Field(default_factory=FilterSettings)
    amcl: AmclSettings = Field(default_factory=AmclSettings)
    trajectory: TrajectorySettings = Field(default_factory=TrajectorySettings)
    experiments: ExperimentSettings = Field(default_factory=ExperimentSettings)

    def canonical_json(self) -> str:
        """Config dump without ``threads`` and ``output_dir``, which do not change results."""

        payload = self.model_dump(mode="json", exclude={"threads", "output_dir"})
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def deep_merge(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``overrides`` into ``base``; ``None`` override values are skipped."""

    merged: Dict[str, Any] = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        elif isinstance(value, Mapping):
            merged[key] = deep_merge({}, value)
        else:
            merged[key] = value
    return merged


def load_run_config(path: Path | str | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read a JSON config (optional) and apply flag overrides on top."""

    payload: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise FileNotFoundError(f"config file not found: {path}") from exc
        if not isinstance(payload, dict):
            raise ValueError(f"{path}: config must be a JSON object")
    return RunConfig.model_validate(deep_merge(payload, overrides or {}))


__all__ = [
    "AmclSettings",
    "DESK_SAMPLES",
    "ExperimentSettings",
    "FULL_SCALE_SAMPLES",
    "FilterSettings",
    "HypothesisSettings",
    "OutlierSettings",
    "RegistrationSettings",
    "RunConfig",
    "SensorSettings",
    "TrajectorySettings",
    "deep_merge",
    "load_run_config",
]
