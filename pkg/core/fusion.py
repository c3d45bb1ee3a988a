"""Velocity-input dynamics and the particle / extended Kalman filters fusing ILM poses."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .errors import FilterError, LocalizationError, WeightError
from .geometry import Pose2D, circular_mean, wrap_angle, wrap_angles

LOGGER = logging.getLogger(__name__)

DEFAULT_PARTICLES = 100
WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ControlInput:
    """Body-frame velocities: forward, lateral (m/s) and yaw rate (rad/s)."""

    v_f: float = 0.0
    v_s: float = 0.0
    omega: float = 0.0

    def __post_init__(self) -> None:
        for name in ("v_f", "v_s", "omega"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise LocalizationError(f"{name} must be finite", **{name: value})
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.v_f, self.v_s, self.omega])

    def as_dict(self) -> Dict[str, float]:
        return {"v_f": self.v_f, "v_s": self.v_s, "omega": self.omega}


@dataclass(frozen=True)
class RobotState:
    pose: Pose2D

    def as_array(self) -> np.ndarray:
        return self.pose.as_array()

    @classmethod
    def from_array(cls, values: np.ndarray) -> "RobotState":
        return cls(Pose2D.from_array(values))


@dataclass(frozen=True)
class NoiseModel:
    """Per-step process std and measurement std, both as ``(m, m, rad)``."""

    process_std: Tuple[float, float, float] = (0.02, 0.02, 0.02)
    measurement_std: Tuple[float, float, float] = (0.3, 0.3, 0.1)

    def __post_init__(self) -> None:
        for name in ("process_std", "measurement_std"):
            values = tuple(float(v) for v in getattr(self, name))
            if len(values) != 3 or any(v < 0 or not math.isfinite(v) for v in values):
                raise LocalizationError(f"{name} must be three non-negative numbers", **{name: list(values)})
            object.__setattr__(self, name, values)

    @property
    def process_cov(self) -> np.ndarray:
        return np.diag(np.square(self.process_std))

    @property
    def measurement_cov(self) -> np.ndarray:
        return np.diag(np.square(self.measurement_std))


@dataclass(frozen=True)
class ParticleSet:
    """``particles`` is ``(N, 3)``; ``weights`` sum to one."""

    particles: np.ndarray
    weights: np.ndarray
    diverged: bool = False
    resampled: bool = False

    def __post_init__(self) -> None:
        particles = np.asarray(self.particles, dtype=float).reshape(-1, 3)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if particles.shape[0] < 1:
            raise WeightError("particle set is empty")
        if weights.shape[0] != particles.shape[0]:
            raise WeightError("one weight per particle required", particles=particles.shape[0], weights=weights.shape[0])
        object.__setattr__(self, "particles", particles)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return int(self.particles.shape[0])

    @classmethod
    def around(
        cls,
        pose: Pose2D,
        count: int = DEFAULT_PARTICLES,
        std: Tuple[float, float, float] = (0.0, 0.0, 0.0),
        seed: int = 0,
    ) -> "ParticleSet":
        """Gaussian cloud centred on ``pose`` with uniform weights."""

        if count < 1:
            raise WeightError("particle count must be at least 1", count=count)
        rng = np.random.default_rng([seed, 0x5EED])
        particles = pose.as_array() + rng.normal(size=(count, 3)) * np.asarray(std, dtype=float)
        particles[:, 2] = wrap_angles(particles[:, 2])
        return cls(particles, np.full(count, 1.0 / count))

    def estimate(self) -> RobotState:
        return RobotState(estimate_pose(self.particles, self.weights))


# ----------------------------------------------------------------------
# dynamics


def predict_array(states: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """Vectorised dynamics for ``(N, 3)`` states and a ``(3,)`` or ``(N, 3)`` input."""

    states = np.asarray(states, dtype=float).reshape(-1, 3)
    u = np.broadcast_to(np.asarray(u, dtype=float), states.shape)
    c, s = np.cos(states[:, 2]), np.sin(states[:, 2])
    out = states.copy()
    out[:, 0] += (c * u[:, 0] - s * u[:, 1]) * dt
    out[:, 1] += (s * u[:, 0] + c * u[:, 1]) * dt
    out[:, 2] = wrap_angles(states[:, 2] + u[:, 2] * dt)
    return out


def predict_state(x: RobotState, u: ControlInput, dt: float) -> RobotState:
    """Noise-free step ``X' = X + B(theta) U dt``; ``B`` rotates ``(v_f, v_s)``."""

    if not dt > 0:
        raise LocalizationError("dt must be positive", dt=dt)
    return RobotState.from_array(predict_array(x.as_array(), u.as_array(), dt)[0])


def motion_jacobian(x: RobotState, u: ControlInput, dt: float) -> np.ndarray:
    theta = x.pose.theta
    c, s = math.cos(theta), math.sin(theta)
    jac = np.eye(3)
    jac[0, 2] = (-s * u.v_f - c * u.v_s) * dt
    jac[1, 2] = (c * u.v_f - s * u.v_s) * dt
    return jac


# ----------------------------------------------------------------------
# particle filter


def effective_sample_size(weights: np.ndarray) -> float:
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0:
        raise WeightError("no weights")
    total = float(weights.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightError("weights are not normalised", total=total)
    return 1.0 / float(np.sum(weights**2))


def _systematic_indices(weights: np.ndarray, offset: float, n: int) -> np.ndarray:
    positions = (np.arange(n) + offset) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side="right").astype(int)


def systematic_resample(weights: np.ndarray, seed: int | np.random.Generator = 0, n: int | None = None) -> np.ndarray:
    """Draw ``n`` (default ``len(weights)``) indices with one shared random offset."""

    weights = np.asarray(weights, dtype=float)
    if weights.size == 0:
        raise WeightError("no weights")
    if abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
        raise WeightError("weights are not normalised", total=float(weights.sum()))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _systematic_indices(weights, float(rng.random()), n or weights.size)


def estimate_pose(particles: np.ndarray, weights: np.ndarray) -> Pose2D:
    """Weighted mean position with circular mean heading."""

    x = float(np.dot(weights, particles[:, 0]))
    y = float(np.dot(weights, particles[:, 1]))
    return Pose2D(x, y, circular_mean(particles[:, 2], weights))


def measurement_likelihood(particles: np.ndarray, z: Pose2D, std: Tuple[float, float, float]) -> np.ndarray:
    """Independent Gaussians on ``(dx, dy, wrap(dtheta))``; zero std demands equality."""

    diff = np.column_stack(
        [
            particles[:, 0] - z.t_x,
            particles[:, 1] - z.t_y,
            wrap_angles(particles[:, 2] - z.theta),
        ]
    )
    sigma = np.asarray(std, dtype=float)
    likelihood = np.ones(particles.shape[0])
    for k in range(3):
        if sigma[k] > 0:
            likelihood *= np.exp(-0.5 * (diff[:, k] / sigma[k]) ** 2)
        else:
            likelihood *= diff[:, k] == 0
    return likelihood


def pf_step(
    ps: ParticleSet,
    u: ControlInput,
    z: Pose2D | None,
    dt: float,
    noise: NoiseModel,
    seed: int = 0,
    step: int = 0,
) -> Tuple[ParticleSet, RobotState]:
    """Predict, weight by the measurement, resample when N_eff < N/2, estimate.

    Process noise and the resampling offset come from one generator keyed by
    ``(seed, step)``.
    """

    if not dt > 0:
        raise LocalizationError("dt must be positive", dt=dt)
    rng = np.random.default_rng([seed, step])
    n = ps.size
    particles = predict_array(ps.particles, u.as_array(), dt)
    particles += rng.normal(size=(n, 3)) * np.asarray(noise.process_std)
    particles[:, 2] = wrap_angles(particles[:, 2])

    weights = ps.weights
    diverged = False
    resampled = False
    if z is not None:
        weights = weights * measurement_likelihood(particles, z, noise.measurement_std)
        total = float(weights.sum())
        if not math.isfinite(total) or total <= 1e-300:
            LOGGER.warning("particle weights collapsed, resetting to uniform", extra={"step": step, "particles": n})
            weights = np.full(n, 1.0 / n)
            diverged = True
        else:
            weights = weights / total

    estimate = estimate_pose(particles, weights)

    if z is not None and effective_sample_size(weights) < n / 2:
        idx = _systematic_indices(weights, float(rng.random()), n)
        particles = particles[idx]
        weights = np.full(n, 1.0 / n)
        resampled = True

    return ParticleSet(particles, weights, diverged, resampled), RobotState(estimate)


# ----------------------------------------------------------------------
# EKF


def ekf_step(
    mean: RobotState,
    cov: np.ndarray,
    u: ControlInput,
    z: Pose2D | None,
    dt: float,
    noise: NoiseModel,
) -> Tuple[RobotState, np.ndarray]:
    """EKF with ``H = I``; innovation heading wrapped, Joseph-form update."""

    cov = np.asarray(cov, dtype=float)
    if cov.shape != (3, 3):
        raise FilterError("covariance must be 3x3", shape=list(cov.shape))

    jac = motion_jacobian(mean, u, dt)
    predicted = predict_state(mean, u, dt)
    p = jac @ cov @ jac.T + noise.process_cov
    if z is None:
        return predicted, 0.5 * (p + p.T)

    x = predicted.as_array()
    innovation = z.as_array() - x
    innovation[2] = wrap_angle(innovation[2])
    r = noise.measurement_cov
    s = p + r
    if not np.all(np.isfinite(s)) or np.linalg.cond(s) > 1e12:
        raise FilterError("innovation covariance is singular", diagonal=np.diag(s).tolist())
    gain = np.linalg.solve(s.T, p.T).T
    x = x + gain @ innovation
    ikh = np.eye(3) - gain
    p = ikh @ p @ ikh.T + gain @ r @ gain.T
    return RobotState(Pose2D.from_array(x)), 0.5 * (p + p.T)


__all__ = [
    "ControlInput",
    "DEFAULT_PARTICLES",
    "NoiseModel",
    "ParticleSet",
    "RobotState",
    "effective_sample_size",
    "ekf_step",
    "estimate_pose",
    "measurement_likelihood",
    "motion_jacobian",
    "pf_step",
    "predict_array",
    "predict_state",
    "systematic_resample",
]
