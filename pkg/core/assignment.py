"""Exact linear-assignment solvers and the landmark matching layer.

Three exact solvers share one contract (minimum total cost, one-to-one):

* :func:`solve_lap_hungarian` – Kuhn–Munkres with starred/primed zeros,
  square input only.
* :func:`solve_lap_jv` – Jonker–Volgenant: column reduction, reduction
  transfer, augmenting row reduction and shortest augmenting paths,
  square input only.
* :func:`solve_lap_jv_modified` – the rectangular shortest-augmenting-path
  variant shipped by SciPy (``linear_sum_assignment``); used for matching.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import AssignmentError, DegenerateGeometryError
from .field_map import FieldMap, Landmark, LandmarkClass
from .geometry import Point2, points_to_array
from .pose_estimation import MIN_PAIRS, estimate_pose_kabsch, pairs_from_matching, residuals

LOGGER = logging.getLogger(__name__)

PADDING_ID = -1


class MatchStrategy(str, Enum):
    SEPARATE = "separate"
    IDENTICAL = "identical"
    PARALLEL_BEST = "parallel_best"
    NEAREST = "nearest"


@dataclass(frozen=True)
class CostMatrix:
    """Cost entries with row/column bookkeeping.

    Padding rows/columns are zero-cost fillers; their ids are ``PADDING_ID``.
    """

    entries: np.ndarray
    row_ids: Tuple[int, ...]
    col_ids: Tuple[int, ...]

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2:
            raise AssignmentError("cost matrix must be two-dimensional", shape=list(entries.shape))
        if not np.all(np.isfinite(entries)):
            raise AssignmentError("cost entries must be finite")
        if np.any(entries < 0):
            raise AssignmentError("cost entries must be non-negative")
        if entries.shape != (len(self.row_ids), len(self.col_ids)):
            raise AssignmentError("id lists do not match the cost shape", shape=list(entries.shape))
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_array(cls, entries: Sequence[Sequence[float]] | np.ndarray) -> "CostMatrix":
        arr = np.asarray(entries, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise AssignmentError("cost matrix must be a non-empty 2D array")
        return cls(arr, tuple(range(arr.shape[0])), tuple(range(arr.shape[1])))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape  # type: ignore[return-value]

    @property
    def is_square(self) -> bool:
        return self.shape[0] == self.shape[1]

    def is_padding_row(self, row: int) -> bool:
        return self.row_ids[row] == PADDING_ID

    def is_padding_col(self, col: int) -> bool:
        return self.col_ids[col] == PADDING_ID

    def padded_square(self) -> "CostMatrix":
        """Return a square copy, filling whichever side is short with zeros."""

        n_rows, n_cols = self.shape
        if n_rows == n_cols:
            return self
        size = max(n_rows, n_cols)
        entries = np.zeros((size, size))
        entries[:n_rows, :n_cols] = self.entries
        rows = self.row_ids + (PADDING_ID,) * (size - n_rows)
        cols = self.col_ids + (PADDING_ID,) * (size - n_cols)
        return CostMatrix(entries, rows, cols)


@dataclass(frozen=True)
class Assignment:
    """Optimal pairs over real rows and real columns.

    Real rows that landed on a padding column are listed in ``unassigned_rows``.
    """

    pairs: Tuple[Tuple[int, int], ...]
    total_cost: float
    mean_cost: float
    unassigned_rows: Tuple[int, ...] = ()

    def pair_set(self) -> frozenset[Tuple[int, int]]:
        return frozenset(self.pairs)

    def as_dict(self) -> Dict[str, object]:
        return {
            "pairs": [list(p) for p in self.pairs],
            "total_cost": self.total_cost,
            "mean_cost": self.mean_cost,
            "unassigned_rows": list(self.unassigned_rows),
        }


CostLike = Union[CostMatrix, np.ndarray, Sequence[Sequence[float]]]


def as_cost_matrix(cost: CostLike) -> CostMatrix:
    if isinstance(cost, CostMatrix):
        return cost
    return CostMatrix.from_array(cost)


def _assignment_from_rows(cost: CostMatrix, col_for_row: Sequence[int]) -> Assignment:
    pairs: List[Tuple[int, int]] = []
    unassigned: List[int] = []
    total = 0.0
    for row, col in enumerate(col_for_row):
        if cost.is_padding_row(row):
            continue
        if col < 0 or cost.is_padding_col(int(col)):
            unassigned.append(row)
            continue
        pairs.append((row, int(col)))
        total += float(cost.entries[row, col])
    mean = total / len(pairs) if pairs else 0.0
    return Assignment(tuple(pairs), total, mean, tuple(unassigned))


def _require_square(cost: CostMatrix, solver: str) -> None:
    if not cost.is_square:
        raise AssignmentError(
            f"{solver} needs a square cost matrix; pad it first",
            shape=list(cost.shape),
        )


# ----------------------------------------------------------------------
# Kuhn–Munkres


def _munkres(c: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    c = c - c.min(axis=1, keepdims=True)
    c -= c.min(axis=0, keepdims=True)

    starred = np.zeros((n, n), dtype=bool)
    primed = np.zeros((n, n), dtype=bool)
    row_covered = np.zeros(n, dtype=bool)
    col_covered = np.zeros(n, dtype=bool)

    for i in range(n):
        for j in np.flatnonzero(c[i] == 0):
            if not row_covered[i] and not col_covered[j]:
                starred[i, j] = True
                row_covered[i] = True
                col_covered[j] = True
                break
    row_covered[:] = False
    col_covered[:] = False

    col_covered |= starred.any(axis=0)
    while col_covered.sum() < n:
        while True:
            uncovered = (c == 0) & ~row_covered[:, None] & ~col_covered[None, :]
            if not uncovered.any():
                mask = ~row_covered[:, None] & ~col_covered[None, :]
                h = c[mask].min()
                c[row_covered] += h
                c[:, ~col_covered] -= h
                continue
            flat = int(np.argmax(uncovered))
            r, k = divmod(flat, n)
            primed[r, k] = True
            star_cols = np.flatnonzero(starred[r])
            if star_cols.size:
                row_covered[r] = True
                col_covered[star_cols[0]] = False
                continue
            # augment along the alternating star/prime path
            path = [(r, k)]
            while True:
                star_rows = np.flatnonzero(starred[:, path[-1][1]])
                if not star_rows.size:
                    break
                sr = int(star_rows[0])
                path.append((sr, path[-1][1]))
                pc = int(np.flatnonzero(primed[sr])[0])
                path.append((sr, pc))
            for pr, pc in path:
                starred[pr, pc] = not starred[pr, pc]
            primed[:] = False
            row_covered[:] = False
            col_covered[:] = starred.any(axis=0)
            break
    return np.argmax(starred, axis=1)


def solve_lap_hungarian(cost: CostLike) -> Assignment:
    """Solve a square LAP with the Kuhn–Munkres algorithm."""

    matrix = as_cost_matrix(cost)
    _require_square(matrix, "hungarian")
    return _assignment_from_rows(matrix, _munkres(matrix.entries.copy()))


# ----------------------------------------------------------------------
# Jonker–Volgenant


def _lapjv(c: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    x = np.full(n, -1, dtype=int)  # column of each row
    y = np.full(n, -1, dtype=int)  # row of each column
    v = np.zeros(n)
    matches = np.zeros(n, dtype=int)

    # column reduction
    for j in range(n - 1, -1, -1):
        imin = int(np.argmin(c[:, j]))
        v[j] = c[imin, j]
        matches[imin] += 1
        if matches[imin] == 1:
            x[imin] = j
            y[j] = imin
        elif v[j] < v[x[imin]]:
            j1 = x[imin]
            x[imin] = j
            y[j] = imin
            y[j1] = -1
        else:
            y[j] = -1

    # reduction transfer
    free: List[int] = []
    for i in range(n):
        if matches[i] == 0:
            free.append(i)
        elif matches[i] == 1:
            j1 = x[i]
            reduced = c[i] - v
            reduced[j1] = math.inf
            v[j1] -= float(reduced.min()) if n > 1 else 0.0
    # augmenting row reduction, two passes
    for _ in range(2):
        pending = free
        free = []
        k = 0
        while k < len(pending):
            i = pending[k]
            k += 1
            reduced = c[i] - v
            j1 = int(np.argmin(reduced))
            umin = float(reduced[j1])
            if n > 1:
                reduced[j1] = math.inf
                j2 = int(np.argmin(reduced))
                usubmin = float(reduced[j2])
            else:
                j2, usubmin = j1, math.inf
            i0 = int(y[j1])
            if umin < usubmin:
                v[j1] -= usubmin - umin
            elif i0 >= 0:
                j1 = j2
                i0 = int(y[j2])
            if i0 >= 0 and x[i0] == j1:
                x[i0] = -1
            x[i] = j1
            y[j1] = i
            if i0 >= 0:
                if umin < usubmin:
                    k -= 1
                    pending[k] = i0
                else:
                    free.append(i0)

    # shortest augmenting paths for the remaining free rows
    for free_row in free:
        d = c[free_row] - v
        pred = np.full(n, free_row, dtype=int)
        collist = list(range(n))
        low = up = 0
        last = 0
        end_of_path = -1
        minimum = 0.0
        while end_of_path < 0:
            if up == low:
                last = low - 1
                minimum = float(d[collist[up]])
                up += 1
                for k in range(up, n):
                    j = collist[k]
                    h = float(d[j])
                    if h <= minimum:
                        if h < minimum:
                            up = low
                            minimum = h
                        collist[k] = collist[up]
                        collist[up] = j
                        up += 1
                for k in range(low, up):
                    if y[collist[k]] < 0:
                        end_of_path = collist[k]
                        break
            if end_of_path < 0:
                j1 = collist[low]
                low += 1
                i = int(y[j1])
                h = float(c[i, j1] - v[j1]) - minimum
                k = up
                while k < n:
                    j = collist[k]
                    v2 = float(c[i, j] - v[j]) - h
                    if v2 < d[j]:
                        pred[j] = i
                        if v2 == minimum:
                            if y[j] < 0:
                                end_of_path = j
                                break
                            collist[k] = collist[up]
                            collist[up] = j
                            up += 1
                        d[j] = v2
                    k += 1
        for k in range(last + 1):
            j1 = collist[k]
            v[j1] += d[j1] - minimum
        while True:
            i = int(pred[end_of_path])
            y[end_of_path] = i
            j1 = end_of_path
            end_of_path = int(x[i])
            x[i] = j1
            if i == free_row:
                break
    return x


def solve_lap_jv(cost: CostLike) -> Assignment:
    """Solve a square LAP with the classic Jonker–Volgenant algorithm."""

    matrix = as_cost_matrix(cost)
    _require_square(matrix, "jonker_volgenant")
    return _assignment_from_rows(matrix, _lapjv(matrix.entries))


# ----------------------------------------------------------------------
# rectangular shortest augmenting path


def _rectangular_rows(entries: np.ndarray) -> np.ndarray:
    n_rows, n_cols = entries.shape
    if n_rows > n_cols:
        raise AssignmentError(
            "modified Jonker-Volgenant needs n_rows <= n_cols",
            shape=[n_rows, n_cols],
        )
    rows, cols = linear_sum_assignment(entries)
    col_for_row = np.full(n_rows, -1, dtype=int)
    col_for_row[rows] = cols
    return col_for_row


def solve_lap_jv_modified(cost: CostLike) -> Assignment:
    """Solve a rectangular LAP (rows <= cols) without padding."""

    matrix = as_cost_matrix(cost)
    return _assignment_from_rows(matrix, _rectangular_rows(matrix.entries))


LapSolver = Callable[[CostLike], Assignment]

SOLVERS: Dict[str, LapSolver] = {
    "hungarian": solve_lap_hungarian,
    "jv": solve_lap_jv,
    "jv_modified": solve_lap_jv_modified,
}


# ----------------------------------------------------------------------
# cost construction


def distance_matrix(points: np.ndarray, targets: np.ndarray) -> np.ndarray:
    diff = np.asarray(points, dtype=float)[:, None, :] - np.asarray(targets, dtype=float)[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def build_cost_matrix(guess_world_pts: Sequence[Point2], candidates: Sequence[Landmark]) -> CostMatrix:
    """Distances from guessed observation positions to candidate landmarks.

    When there are more observations than candidates, zero-cost padding
    columns are appended.
    """

    if not guess_world_pts or not candidates:
        raise AssignmentError(
            "cost matrix needs at least one observation and one candidate",
            observations=len(guess_world_pts),
            candidates=len(candidates),
        )
    pts = points_to_array(guess_world_pts)
    targets = np.array([[lm.position.x, lm.position.y] for lm in candidates])
    entries = distance_matrix(pts, targets)
    col_ids: Tuple[int, ...] = tuple(lm.id for lm in candidates)
    n_rows, n_cols = entries.shape
    if n_rows > n_cols:
        entries = np.hstack([entries, np.zeros((n_rows, n_rows - n_cols))])
        col_ids = col_ids + (PADDING_ID,) * (n_rows - n_cols)
    return CostMatrix(entries, tuple(range(n_rows)), col_ids)


# ----------------------------------------------------------------------
# landmark matching


@dataclass(frozen=True)
class Matching:
    """Observation-to-landmark correspondences, sorted by observation index."""

    correspondences: Tuple[Tuple[int, int], ...]
    distances: Tuple[float, ...]
    mean_error: float
    max_error: float
    strategy_used: MatchStrategy
    unmatched: Tuple[int, ...] = ()
    degraded_classes: Tuple[LandmarkClass, ...] = field(default=())
    # mean pair residual after a rigid refit; set by ParallelBest only
    refit_error: float = math.nan

    @property
    def size(self) -> int:
        return len(self.correspondences)

    def correspondence_set(self) -> frozenset[Tuple[int, int]]:
        return frozenset(self.correspondences)

    def landmark_for(self, observation: int) -> int | None:
        for obs, landmark_id in self.correspondences:
            if obs == observation:
                return landmark_id
        return None

    def as_dict(self) -> Dict[str, object]:
        return {
            "correspondences": [list(p) for p in self.correspondences],
            "mean_error": self.mean_error,
            "max_error": self.max_error,
            "strategy_used": self.strategy_used.value,
            "unmatched": list(self.unmatched),
            "degraded_classes": [c.value for c in self.degraded_classes],
            "refit_error": None if math.isnan(self.refit_error) else self.refit_error,
        }


def _solve_block(points: np.ndarray, targets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Return (target index per point or -1, distance per point)."""

    entries = distance_matrix(points, targets)
    n_rows, n_cols = entries.shape
    if n_rows > n_cols:
        entries_padded = np.hstack([entries, np.zeros((n_rows, n_rows - n_cols))])
        cols = _rectangular_rows(entries_padded)
        cols = np.where(cols < n_cols, cols, -1)
    else:
        cols = _rectangular_rows(entries)
    dists = np.where(cols >= 0, entries[np.arange(n_rows), np.maximum(cols, 0)], np.nan)
    return cols, dists


def _build_matching(
    field_map: FieldMap,
    lm_index: np.ndarray,
    dists: np.ndarray,
    strategy: MatchStrategy,
    degraded: Tuple[LandmarkClass, ...] = (),
) -> Matching:
    matched = np.flatnonzero(lm_index >= 0)
    correspondences = tuple((int(i), int(field_map.ids[lm_index[i]])) for i in matched)
    distances = tuple(float(dists[i]) for i in matched)
    unmatched = tuple(int(i) for i in np.flatnonzero(lm_index < 0))
    if distances:
        mean_error = float(np.mean(distances))
        max_error = float(np.max(distances))
    else:
        mean_error = max_error = math.inf
    return Matching(correspondences, distances, mean_error, max_error, strategy, unmatched, degraded)


def _match_identical(points: np.ndarray, field_map: FieldMap) -> Matching:
    cols, dists = _solve_block(points, field_map.positions)
    return _build_matching(field_map, cols, dists, MatchStrategy.IDENTICAL)


def _match_separate(points: np.ndarray, classes: Sequence[LandmarkClass], field_map: FieldMap) -> Matching:
    n = points.shape[0]
    lm_index = np.full(n, -1, dtype=int)
    dists = np.full(n, np.nan)
    degraded: List[LandmarkClass] = []
    pending: List[int] = []

    by_class: Dict[LandmarkClass, List[int]] = {}
    for idx, cls in enumerate(classes):
        by_class.setdefault(cls, []).append(idx)

    for cls in sorted(by_class, key=lambda c: c.value):
        rows = np.array(by_class[cls], dtype=int)
        candidates = field_map.class_indices.get(cls, np.zeros(0, dtype=int))
        if candidates.size == 0:
            degraded.append(cls)
            pending.extend(rows.tolist())
            continue
        cols, block_dists = _solve_block(points[rows], field_map.positions[candidates])
        surplus = False
        for row, col, dist in zip(rows, cols, block_dists):
            if col >= 0:
                lm_index[row] = candidates[col]
                dists[row] = dist
            else:
                pending.append(int(row))
                surplus = True
        if surplus:
            degraded.append(cls)

    if pending:
        # absent classes and surplus rows share the landmarks left unused
        LOGGER.debug("matching in shared pool", extra={"classes": [c.value for c in degraded]})
        used = set(int(i) for i in lm_index[lm_index >= 0])
        pool = np.array([i for i in range(len(field_map.landmarks)) if i not in used], dtype=int)
        if pool.size:
            rows = np.array(sorted(pending), dtype=int)
            cols, block_dists = _solve_block(points[rows], field_map.positions[pool])
            for row, col, dist in zip(rows, cols, block_dists):
                if col >= 0:
                    lm_index[row] = pool[col]
                    dists[row] = dist

    return _build_matching(field_map, lm_index, dists, MatchStrategy.SEPARATE, tuple(degraded))


def refit_error(points: np.ndarray, matching: Matching, field_map: FieldMap) -> float:
    """Mean pair distance once the matched points are rigidly refit onto their landmarks.

    A rigid motion of ``points`` leaves this value unchanged, so it scores
    the matching rather than the current pose guess. With fewer than two
    usable pairs it falls back to the raw mean distance.
    """

    pairs = pairs_from_matching(points, matching.correspondences, field_map.positions, field_map.index_of)
    if len(pairs) < MIN_PAIRS:
        return matching.mean_error
    try:
        fit = estimate_pose_kabsch(pairs)
    except DegenerateGeometryError:
        return matching.mean_error
    return float(residuals(fit.pose, pairs).mean())


def _match_nearest(points: np.ndarray, field_map: FieldMap) -> Matching:
    dists, rows = field_map.kdtree.query(points, k=1)
    return _build_matching(field_map, np.asarray(rows, dtype=int), np.asarray(dists, dtype=float), MatchStrategy.NEAREST)


def match_points(
    points: np.ndarray,
    classes: Sequence[LandmarkClass],
    field_map: FieldMap,
    strategy: MatchStrategy = MatchStrategy.PARALLEL_BEST,
) -> Matching:
    """Array-level variant of :func:`match_landmarks` used by the hot loops."""

    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if points.shape[0] == 0:
        raise AssignmentError("matching needs at least one observation")
    if strategy is MatchStrategy.NEAREST:
        return _match_nearest(points, field_map)
    if strategy is MatchStrategy.IDENTICAL:
        return _match_identical(points, field_map)
    if strategy is MatchStrategy.SEPARATE:
        return _match_separate(points, classes, field_map)

    separate = _match_separate(points, classes, field_map)
    identical = _match_identical(points, field_map)
    separate = replace(separate, refit_error=refit_error(points, separate, field_map))
    identical = replace(identical, refit_error=refit_error(points, identical, field_map))
    if identical.refit_error < separate.refit_error:
        return identical
    return separate


def match_landmarks(
    guess_world_pts: Sequence[Tuple[Point2, LandmarkClass]],
    field_map: FieldMap,
    strategy: MatchStrategy = MatchStrategy.PARALLEL_BEST,
) -> Matching:
    """Match world-frame observation guesses to map landmarks.

    ``ParallelBest`` runs both the class-separate and the class-identical
    assignment and keeps the one whose pairs fit a rigid motion better
    (see :func:`refit_error`); equal errors keep the class-separate result.
    """

    if not guess_world_pts:
        raise AssignmentError("matching needs at least one observation")
    points = points_to_array(p for p, _ in guess_world_pts)
    classes = [LandmarkClass.parse(c) for _, c in guess_world_pts]
    return match_points(points, classes, field_map, strategy)


__all__ = [
    "Assignment",
    "CostMatrix",
    "MatchStrategy",
    "Matching",
    "PADDING_ID",
    "SOLVERS",
    "as_cost_matrix",
    "build_cost_matrix",
    "distance_matrix",
    "match_landmarks",
    "match_points",
    "refit_error",
    "solve_lap_hungarian",
    "solve_lap_jv",
    "solve_lap_jv_modified",
]
