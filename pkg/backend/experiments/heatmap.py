"""Correct-matching maps over a grid of initial guesses, for ILM and ICP."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Sequence, Tuple

from core.errors import LocalizationError
from core.field_map import FieldMap
from core.geometry import Pose2D, pose_error
from core.registration import RegistrationConfig, RegistrationResult, icp_localize, ilm_localize
from backend.simulation.simulator import SensorModel, SimObservation, ground_truth, visible_landmarks

from .outputs import Table
from .parallel import parallel_map

LOGGER = logging.getLogger(__name__)

METHODS = ("ilm", "icp")
HEATMAP_HEADER = ("x", "y", "budget", "correct", "position_error", "orientation_error", "iterations")
COVERAGE_HEADER = ("method", "budget", "coverage", "cells")


@dataclass(frozen=True)
class HeatmapCell:
    x: float
    y: float
    correct: Tuple[bool, ...]
    position_error: Tuple[float, ...]
    orientation_error: Tuple[float, ...]
    iterations: Tuple[int, ...]


@dataclass(frozen=True)
class HeatmapGrid:
    true_pose: Pose2D
    grid_resolution: float
    method: str
    budgets: Tuple[int, ...]
    cells: Tuple[HeatmapCell, ...]

    def coverage(self, budget: int) -> float:
        idx = self.budgets.index(budget)
        if not self.cells:
            return 0.0
        return sum(cell.correct[idx] for cell in self.cells) / len(self.cells)

    def table(self) -> Table:
        table = Table(HEATMAP_HEADER)
        for cell in self.cells:
            for k, budget in enumerate(self.budgets):
                table.add(
                    cell.x,
                    cell.y,
                    budget,
                    cell.correct[k],
                    cell.position_error[k],
                    cell.orientation_error[k],
                    cell.iterations[k],
                )
        return table

    def coverage_table(self) -> Table:
        table = Table(COVERAGE_HEADER)
        for budget in self.budgets:
            table.add(self.method, budget, self.coverage(budget), len(self.cells))
        return table


def grid_nodes(field_map: FieldMap, resolution: float) -> List[Tuple[float, float]]:
    """Lattice nodes covering the field rectangle, boundaries included."""

    if not resolution > 0:
        raise ValueError("grid resolution must be positive")
    half_l, half_w = field_map.field_length / 2, field_map.field_width / 2
    nx = int(math.floor(field_map.field_length / resolution + 1e-9))
    ny = int(math.floor(field_map.field_width / resolution + 1e-9))
    xs = [-half_l + i * resolution for i in range(nx + 1)]
    ys = [-half_w + j * resolution for j in range(ny + 1)]
    return [(x, y) for x in xs for y in ys]


def register(
    method: str,
    observations: Sequence[SimObservation],
    initial: Pose2D,
    field_map: FieldMap,
    cfg: RegistrationConfig,
) -> RegistrationResult:
    if method == "ilm":
        return ilm_localize([o.as_pair() for o in observations], initial, field_map, cfg)
    if method == "icp":
        return icp_localize([o.point for o in observations], initial, field_map, cfg)
    raise ValueError(f"unknown registration method {method!r}")


def _evaluate_cell(
    method: str,
    observations: Sequence[SimObservation],
    truth: frozenset,
    true_pose: Pose2D,
    xy: Tuple[float, float],
    budgets: Tuple[int, ...],
    field_map: FieldMap,
    cfg: RegistrationConfig,
) -> HeatmapCell:
    initial = Pose2D(xy[0], xy[1], 0.0)
    try:
        result = register(method, observations, initial, field_map, cfg)
    except LocalizationError:
        nan = (math.nan,) * len(budgets)
        return HeatmapCell(xy[0], xy[1], (False,) * len(budgets), nan, nan, (0,) * len(budgets))
    correct, pos, ang, iters = [], [], [], []
    for budget in budgets:
        record = result.history[min(budget, len(result.history)) - 1]
        correct.append(record.correspondences == truth)
        p, a = pose_error(record.pose, true_pose)
        pos.append(p)
        ang.append(a)
        iters.append(record.iteration)
    return HeatmapCell(xy[0], xy[1], tuple(correct), tuple(pos), tuple(ang), tuple(iters))


def heatmap(
    true_pose: Pose2D,
    method: str,
    max_iter: int | Sequence[int],
    field_map: FieldMap,
    sensor: SensorModel | None = None,
    seed: int = 0,
    *,
    grid_resolution: float = 0.25,
    cfg: RegistrationConfig | None = None,
    threads: int = 1,
) -> HeatmapGrid:
    """Run registration from every grid node (heading 0) towards one true pose.

    One run with the largest budget is made per node; smaller budgets read
    the per-iteration history, which is the prefix such a run would produce.
    """

    if method not in METHODS:
        raise ValueError(f"unknown registration method {method!r}")
    budgets = (max_iter,) if isinstance(max_iter, int) else tuple(max_iter)
    budgets = tuple(sorted(set(int(b) for b in budgets)))
    if not budgets or budgets[0] < 1:
        raise ValueError("iteration budgets must be positive")
    cfg = replace(cfg or RegistrationConfig(), max_iteration=budgets[-1])

    observations = tuple(visible_landmarks(true_pose, field_map, sensor or SensorModel(), seed, 0))
    truth = ground_truth(observations)
    nodes = grid_nodes(field_map, grid_resolution)
    cells = parallel_map(
        lambda xy: _evaluate_cell(method, observations, truth, true_pose, xy, budgets, field_map, cfg),
        nodes,
        threads,
    )
    grid = HeatmapGrid(true_pose, grid_resolution, method, budgets, tuple(cells))
    LOGGER.debug(
        "heatmap finished",
        extra={"method": method, "cells": len(cells), "coverage": grid.coverage(budgets[-1])},
    )
    return grid


def coverage_summary(grid: HeatmapGrid) -> Dict[str, float]:
    return {f"coverage_{grid.method}_{b}": grid.coverage(b) for b in grid.budgets}


__all__ = [
    "COVERAGE_HEADER",
    "HEATMAP_HEADER",
    "HeatmapCell",
    "HeatmapGrid",
    "METHODS",
    "coverage_summary",
    "grid_nodes",
    "heatmap",
    "register",
]
