"""Augmented Monte Carlo localization baseline with per-particle landmark matching."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from core.assignment import MatchStrategy, match_points
from core.errors import LocalizationError
from core.field_map import FieldMap, LandmarkClass
from core.fusion import estimate_pose, predict_array, systematic_resample
from core.geometry import Pose2D, points_to_array, transform_array, wrap_angles
from backend.simulation.rng import STREAM_FILTER, stream
from backend.simulation.simulator import SimFrame

LOGGER = logging.getLogger(__name__)

Triple = Tuple[float, float, float]


@dataclass(frozen=True)
class AmclConfig:
    particles: int = 200
    alpha_slow: float = 0.001
    alpha_fast: float = 0.1
    likelihood_std: float = 0.5
    process_std: Triple = (0.02, 0.02, 0.02)
    initial_std: Triple = (0.05, 0.05, 0.02)
    strategy: MatchStrategy = MatchStrategy.SEPARATE

    def __post_init__(self) -> None:
        if self.particles < 1:
            raise LocalizationError("aMCL needs at least one particle", particles=self.particles)
        if not 0 <= self.alpha_slow < self.alpha_fast:
            raise LocalizationError(
                "recovery rates must satisfy 0 <= alpha_slow < alpha_fast",
                alpha_slow=self.alpha_slow,
                alpha_fast=self.alpha_fast,
            )
        if not self.likelihood_std > 0:
            raise LocalizationError("likelihood_std must be positive")
        for name in ("process_std", "initial_std"):
            values = tuple(float(v) for v in getattr(self, name))
            if len(values) != 3 or any(v < 0 for v in values):
                raise LocalizationError(f"{name} must be three non-negative numbers")
            object.__setattr__(self, name, values)


class AmclFilter:
    """Particle cloud with slow/fast likelihood averages driving random injection.

    Each particle matches the observations on its own pose; its likelihood is
    ``exp(-0.5 * mean(d^2) / std^2)`` over the matched pairs, with unmatched
    observations counted at three standard deviations.
    """

    def __init__(
        self,
        field_map: FieldMap,
        cfg: AmclConfig | None = None,
        seed: int = 0,
        start: Pose2D | None = None,
    ) -> None:
        self.field_map = field_map
        self.cfg = cfg or AmclConfig()
        self.seed = seed
        self.w_slow = 0.0
        self.w_fast = 0.0
        self.injected = 0
        n = self.cfg.particles
        rng = stream(seed, STREAM_FILTER, 0)
        if start is None:
            self.particles = self._uniform_poses(rng, n)
        else:
            self.particles = start.as_array() + rng.normal(size=(n, 3)) * np.asarray(self.cfg.initial_std)
            self.particles[:, 2] = wrap_angles(self.particles[:, 2])
        self.weights = np.full(n, 1.0 / n)

    def _uniform_poses(self, rng: np.random.Generator, n: int) -> np.ndarray:
        half_l = self.field_map.field_length / 2
        half_w = self.field_map.field_width / 2
        return np.column_stack(
            [
                rng.uniform(-half_l, half_l, size=n),
                rng.uniform(-half_w, half_w, size=n),
                rng.uniform(-math.pi, math.pi, size=n),
            ]
        )

    def likelihoods(self, body: np.ndarray, classes: Sequence[LandmarkClass]) -> np.ndarray:
        n_obs = body.shape[0]
        penalty = (3.0 * self.cfg.likelihood_std) ** 2
        out = np.empty(self.particles.shape[0])
        for idx, particle in enumerate(self.particles):
            guess = transform_array(Pose2D.from_array(particle), body)
            matching = match_points(guess, classes, self.field_map, self.cfg.strategy)
            squared = float(np.sum(np.square(matching.distances))) + penalty * len(matching.unmatched)
            out[idx] = math.exp(-0.5 * squared / n_obs / self.cfg.likelihood_std**2)
        return out

    def step(self, frame: SimFrame, dt: float, *, predict: bool = True) -> Pose2D:
        rng = stream(self.seed, STREAM_FILTER, frame.index + 1)
        n = self.particles.shape[0]
        if predict:
            self.particles = predict_array(self.particles, frame.control.as_array(), dt)
            self.particles += rng.normal(size=(n, 3)) * np.asarray(self.cfg.process_std)
            self.particles[:, 2] = wrap_angles(self.particles[:, 2])
        if not frame.observations:
            return estimate_pose(self.particles, self.weights)

        body = points_to_array(o.point for o in frame.observations)
        classes = [o.cls for o in frame.observations]
        raw = self.weights * self.likelihoods(body, classes)
        w_avg = float(raw.sum())
        if not w_avg > 0:
            LOGGER.debug("all particle likelihoods vanished", extra={"frame": frame.index})
            weights = np.full(n, 1.0 / n)
        else:
            weights = raw / w_avg
        self.w_slow += self.cfg.alpha_slow * (w_avg - self.w_slow)
        self.w_fast += self.cfg.alpha_fast * (w_avg - self.w_fast)
        estimate = estimate_pose(self.particles, weights)

        inject = max(0.0, 1.0 - self.w_fast / self.w_slow) if self.w_slow > 0 else 0.0
        resampled = self.particles[systematic_resample(weights, rng)]
        replace = rng.random(size=n) < inject
        if replace.any():
            resampled[replace] = self._uniform_poses(rng, int(replace.sum()))
            self.injected += int(replace.sum())
        self.particles = resampled
        self.weights = np.full(n, 1.0 / n)
        return estimate


def amcl_localize(
    frames: Sequence[SimFrame],
    field_map: FieldMap,
    cfg: AmclConfig | None = None,
    seed: int = 0,
    dt: float = 0.01,
    start: Pose2D | None = None,
) -> List[Pose2D]:
    """Per-frame aMCL estimates; ``start=None`` spreads particles over the field."""

    flt = AmclFilter(field_map, cfg, seed, start)
    return [flt.step(frame, dt, predict=k > 0) for k, frame in enumerate(frames)]


__all__ = ["AmclConfig", "AmclFilter", "amcl_localize"]
