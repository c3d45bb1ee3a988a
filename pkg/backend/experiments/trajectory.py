"""Trajectory runs: ILM with PF/EKF fusion, raw ILM, dead reckoning and aMCL."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Protocol, Sequence, Tuple

import numpy as np

from core.errors import LocalizationError
from core.field_map import FieldMap
from core.fusion import NoiseModel, ParticleSet, RobotState, ekf_step, pf_step, predict_state
from core.geometry import Pose2D, pose_error
from core.pose_estimation import MIN_PAIRS
from core.registration import RegistrationConfig, ilm_localize
from core.robustness import GlobalFix, HypothesisSet, OutlierConfig, drop_outliers, global_localize_detailed
from backend.metrics import record_outlier_outcome, record_registration, record_rmse
from backend.simulation.simulator import SimFrame

from .amcl import AmclConfig, AmclFilter
from .outputs import Table

LOGGER = logging.getLogger(__name__)

Triple = Tuple[float, float, float]

TRAJECTORY_METHODS = ("ilm+pf", "ilm+ekf", "ilm", "dead-reckoning", "amcl")
FRAME_HEADER = (
    "index",
    "time",
    "true_x",
    "true_y",
    "true_theta",
    "est_x",
    "est_y",
    "est_theta",
    "position_error",
    "orientation_error",
    "measured",
)
TIMING_HEADER = ("method", "index", "latency_ms")


@dataclass(frozen=True)
class PipelineConfig:
    registration: RegistrationConfig = field(default_factory=RegistrationConfig)
    outliers: OutlierConfig = field(default_factory=OutlierConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    particles: int = 100
    initial_std: Triple = (0.05, 0.05, 0.02)
    amcl: AmclConfig = field(default_factory=AmclConfig)
    hypotheses: HypothesisSet | None = None


@dataclass(frozen=True)
class FrameEstimate:
    index: int
    time: float
    true_pose: Pose2D
    estimate: Pose2D
    measured: bool
    latency_ms: float = 0.0

    @property
    def errors(self) -> Tuple[float, float]:
        return pose_error(self.estimate, self.true_pose)

    def as_row(self) -> Tuple[object, ...]:
        pos, ang = self.errors
        return (
            self.index,
            self.time,
            *self.true_pose.as_tuple(),
            *self.estimate.as_tuple(),
            pos,
            ang,
            self.measured,
        )


def _rmse(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(values)))) if values.size else math.nan


@dataclass(frozen=True)
class TrajectoryRun:
    method: str
    frames: Tuple[FrameEstimate, ...]
    global_fix: GlobalFix | None = None

    def error_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        errors = np.array([f.errors for f in self.frames], dtype=float).reshape(-1, 2)
        return errors[:, 0], errors[:, 1]

    def summary(self) -> Dict[str, float]:
        """Error statistics; wall-clock latency is left to :meth:`timing_table`."""

        pos, ang = self.error_arrays()
        out: Dict[str, float] = {
            "frames": len(self.frames),
            "measured_frames": sum(f.measured for f in self.frames),
            "position_rmse": _rmse(pos),
            "orientation_rmse": _rmse(ang),
            "orientation_rmse_deg": math.degrees(_rmse(ang)),
            "position_min": float(pos.min()) if pos.size else math.nan,
            "position_max": float(pos.max()) if pos.size else math.nan,
            "orientation_min": float(ang.min()) if ang.size else math.nan,
            "orientation_max": float(ang.max()) if ang.size else math.nan,
            "final_position_error": float(pos[-1]) if pos.size else math.nan,
            "final_orientation_error": float(ang[-1]) if ang.size else math.nan,
        }
        if self.global_fix is not None:
            out["global_fix_frame"] = self.global_fix.frame_index
            out["global_fix_hypothesis"] = self.global_fix.hypothesis_index
        return out

    def table(self) -> Table:
        table = Table(FRAME_HEADER)
        for frame in self.frames:
            table.add(*frame.as_row())
        return table

    def timing_table(self) -> Table:
        table = Table(TIMING_HEADER)
        for frame in self.frames:
            table.add(self.method, frame.index, frame.latency_ms)
        return table

    @property
    def mean_latency_ms(self) -> float:
        return float(np.mean([f.latency_ms for f in self.frames])) if self.frames else math.nan


# ----------------------------------------------------------------------
# pipelines


class IlmMeasurer:
    """ILM pose from a prior, refined by outlier dropping; ``None`` when unusable."""

    def __init__(self, field_map: FieldMap, cfg: PipelineConfig, seed: int) -> None:
        self.field_map = field_map
        self.cfg = cfg
        self.seed = seed

    def __call__(self, frame: SimFrame, prior: Pose2D) -> Pose2D | None:
        obs = frame.observation_pairs()
        if len(obs) < MIN_PAIRS:
            return None
        try:
            result = ilm_localize(obs, prior, self.field_map, self.cfg.registration)
            refined = drop_outliers(
                obs, result, self.field_map, self.cfg.outliers, self.cfg.registration, seed=self.seed + frame.index
            )
        except LocalizationError as exc:
            LOGGER.debug("frame measurement rejected", extra={"frame": frame.index, "error_code": exc.code})
            return None
        record_registration("ilm", result.converged)
        if refined.low_confidence:
            record_outlier_outcome("low_confidence")
            return None
        record_outlier_outcome("pass_through" if refined is result else "refined")
        return refined.pose


class Pipeline(Protocol):
    def step(self, frame: SimFrame) -> Tuple[Pose2D, bool]: ...


class DeadReckoning:
    def __init__(self, start: Pose2D, dt: float) -> None:
        self.state = RobotState(start)
        self.dt = dt

    def step(self, frame: SimFrame) -> Tuple[Pose2D, bool]:
        self.state = predict_state(self.state, frame.control, self.dt)
        return self.state.pose, False


class RawIlm:
    """ILM estimate when available, odometry propagation otherwise."""

    def __init__(self, start: Pose2D, dt: float, measure: IlmMeasurer) -> None:
        self.state = RobotState(start)
        self.dt = dt
        self.measure = measure

    def step(self, frame: SimFrame) -> Tuple[Pose2D, bool]:
        prior = predict_state(self.state, frame.control, self.dt)
        z = self.measure(frame, prior.pose)
        self.state = RobotState(z) if z is not None else prior
        return self.state.pose, z is not None


class IlmParticleFilter:
    def __init__(self, start: Pose2D, dt: float, measure: IlmMeasurer, cfg: PipelineConfig, seed: int) -> None:
        self.particles = ParticleSet.around(start, cfg.particles, cfg.initial_std, seed)
        self.state = RobotState(start)
        self.dt = dt
        self.measure = measure
        self.noise = cfg.noise
        self.seed = seed

    def step(self, frame: SimFrame) -> Tuple[Pose2D, bool]:
        prior = predict_state(self.state, frame.control, self.dt)
        z = self.measure(frame, prior.pose)
        self.particles, self.state = pf_step(
            self.particles, frame.control, z, self.dt, self.noise, seed=self.seed, step=frame.index
        )
        return self.state.pose, z is not None


class IlmKalmanFilter:
    def __init__(self, start: Pose2D, dt: float, measure: IlmMeasurer, cfg: PipelineConfig) -> None:
        self.state = RobotState(start)
        self.cov = np.diag(np.square(cfg.initial_std))
        self.dt = dt
        self.measure = measure
        self.noise = cfg.noise

    def step(self, frame: SimFrame) -> Tuple[Pose2D, bool]:
        prior = predict_state(self.state, frame.control, self.dt)
        z = self.measure(frame, prior.pose)
        self.state, self.cov = ekf_step(self.state, self.cov, frame.control, z, self.dt, self.noise)
        return self.state.pose, z is not None


class Amcl:
    def __init__(self, start: Pose2D, dt: float, field_map: FieldMap, cfg: PipelineConfig, seed: int) -> None:
        self.filter = AmclFilter(field_map, cfg.amcl, seed, start)
        self.dt = dt

    def step(self, frame: SimFrame) -> Tuple[Pose2D, bool]:
        return self.filter.step(frame, self.dt), bool(frame.observations)


def build_pipeline(
    method: str, start: Pose2D, field_map: FieldMap, cfg: PipelineConfig, seed: int, dt: float
) -> Pipeline:
    if method == "dead-reckoning":
        return DeadReckoning(start, dt)
    if method == "amcl":
        return Amcl(start, dt, field_map, cfg, seed)
    measure = IlmMeasurer(field_map, cfg, seed)
    if method == "ilm":
        return RawIlm(start, dt, measure)
    if method == "ilm+pf":
        return IlmParticleFilter(start, dt, measure, cfg, seed)
    if method == "ilm+ekf":
        return IlmKalmanFilter(start, dt, measure, cfg)
    raise ValueError(f"unknown trajectory method {method!r}")


def run_trajectory(
    method: str,
    frames: Sequence[SimFrame],
    field_map: FieldMap,
    cfg: PipelineConfig | None = None,
    seed: int = 0,
    dt: float = 0.01,
    *,
    global_init: bool = False,
    threads: int = 1,
) -> TrajectoryRun:
    """Stream ``frames`` through one pipeline and collect per-frame estimates.

    The pipeline starts from the first true pose, or with ``global_init``
    from the global fix, in which case frames before the fix are skipped and
    the fix frame reports the fix pose without stepping the pipeline.
    """

    if method not in TRAJECTORY_METHODS:
        raise ValueError(f"unknown trajectory method {method!r}")
    if not frames:
        raise LocalizationError("trajectory has no frames")
    cfg = cfg or PipelineConfig()

    fix: GlobalFix | None = None
    start, first = frames[0].true_pose, 0
    if global_init:
        fix = global_localize_detailed(
            [f.observation_pairs() for f in frames],
            field_map,
            cfg.hypotheses,
            cfg.registration,
            max_workers=threads,
        )
        start, first = fix.pose, fix.frame_index
        LOGGER.info("global fix", extra={"frame": first, "hypothesis": fix.hypothesis_index})

    pipeline = build_pipeline(method, start, field_map, cfg, seed, dt)
    estimates: List[FrameEstimate] = []
    if fix is not None:
        # the fix already is the estimate for its own frame
        anchor = frames[first]
        estimates.append(FrameEstimate(anchor.index, anchor.time, anchor.true_pose, fix.pose, True))
        first += 1
    for frame in frames[first:]:
        began = time.perf_counter()
        pose, measured = pipeline.step(frame)
        latency = (time.perf_counter() - began) * 1000.0
        estimates.append(FrameEstimate(frame.index, frame.time, frame.true_pose, pose, measured, latency))

    run = TrajectoryRun(method, tuple(estimates), fix)
    summary = run.summary()
    record_rmse(method, summary["position_rmse"], summary["orientation_rmse"])
    LOGGER.debug(
        "trajectory run finished",
        extra={"method": method, "frames": len(estimates), "position_rmse": summary["position_rmse"]},
    )
    return run


__all__ = [
    "FRAME_HEADER",
    "FrameEstimate",
    "IlmMeasurer",
    "PipelineConfig",
    "TIMING_HEADER",
    "TRAJECTORY_METHODS",
    "TrajectoryRun",
    "build_pipeline",
    "run_trajectory",
]
