import itertools

import numpy as np
import pytest

from core.assignment import (
    PADDING_ID,
    CostMatrix,
    MatchStrategy,
    build_cost_matrix,
    match_landmarks,
    match_points,
    refit_error,
    solve_lap_hungarian,
    solve_lap_jv,
    solve_lap_jv_modified,
)
from core.errors import AssignmentError
from core.field_map import FieldMap, Landmark, LandmarkClass
from core.geometry import Point2, Pose2D, transform_array

SQUARE_SOLVERS = (solve_lap_hungarian, solve_lap_jv, solve_lap_jv_modified)


def _brute_force(entries: np.ndarray) -> float:
    n_rows, n_cols = entries.shape
    return min(
        sum(entries[r, c] for r, c in zip(range(n_rows), cols))
        for cols in itertools.permutations(range(n_cols), n_rows)
    )


@pytest.mark.parametrize("solver", SQUARE_SOLVERS)
def test_square_solvers_reach_the_optimum(solver) -> None:
    rng = np.random.default_rng(7)
    for size in (1, 2, 4, 6):
        for _ in range(5):
            entries = rng.uniform(0.0, 10.0, size=(size, size))
            result = solver(entries)
            assert result.total_cost == pytest.approx(_brute_force(entries))
            assert sorted(r for r, _ in result.pairs) == list(range(size))
            assert len({c for _, c in result.pairs}) == size


def test_integer_costs_with_ties() -> None:
    entries = np.array([[4, 1, 3], [2, 0, 5], [3, 2, 2]], dtype=float)
    for solver in SQUARE_SOLVERS:
        assert solver(entries).total_cost == pytest.approx(5.0)
    flat = np.ones((5, 5))
    for solver in SQUARE_SOLVERS:
        result = solver(flat)
        assert result.total_cost == pytest.approx(5.0)
        assert len(result.pair_set()) == 5


def test_rectangular_modified_solver() -> None:
    rng = np.random.default_rng(11)
    entries = rng.uniform(0.0, 5.0, size=(3, 6))
    result = solve_lap_jv_modified(entries)
    assert result.total_cost == pytest.approx(_brute_force(entries))
    assert len(result.pairs) == 3


def test_padded_square_matches_rectangular_optimum() -> None:
    rng = np.random.default_rng(3)
    rect = CostMatrix.from_array(rng.uniform(0.0, 5.0, size=(3, 5)))
    square = rect.padded_square()
    assert square.shape == (5, 5)
    assert square.row_ids[3:] == (PADDING_ID, PADDING_ID)
    expected = solve_lap_jv_modified(rect).total_cost
    assert solve_lap_hungarian(square).total_cost == pytest.approx(expected)
    assert solve_lap_jv(square).total_cost == pytest.approx(expected)


def test_rows_on_padding_columns_are_unassigned() -> None:
    tall = CostMatrix.from_array([[1.0, 2.0], [2.0, 1.0], [0.5, 0.5], [9.0, 9.0]])
    result = solve_lap_hungarian(tall.padded_square())
    assert len(result.pairs) == 2
    assert len(result.unassigned_rows) == 2
    assert result.total_cost == pytest.approx(1.5)


def test_solver_input_errors() -> None:
    with pytest.raises(AssignmentError):
        solve_lap_hungarian(np.ones((2, 3)))
    with pytest.raises(AssignmentError):
        solve_lap_jv(np.ones((3, 2)))
    with pytest.raises(AssignmentError):
        solve_lap_jv_modified(np.ones((3, 2)))
    with pytest.raises(AssignmentError):
        CostMatrix.from_array([[1.0, -1.0], [0.0, 1.0]])
    with pytest.raises(AssignmentError):
        CostMatrix.from_array([[1.0, float("nan")], [0.0, 1.0]])
    with pytest.raises(AssignmentError):
        CostMatrix.from_array(np.zeros((0, 0)))


def test_build_cost_matrix_pads_missing_candidates() -> None:
    candidates = [Landmark(5, LandmarkClass.CORNER, Point2(0.0, 0.0))]
    cost = build_cost_matrix([Point2(3.0, 4.0), Point2(0.0, 1.0)], candidates)
    assert cost.shape == (2, 2)
    assert cost.col_ids == (5, PADDING_ID)
    assert cost.entries[0, 0] == pytest.approx(5.0)
    with pytest.raises(AssignmentError):
        build_cost_matrix([], candidates)


# ----------------------------------------------------------------------
# landmark matching


def test_single_observation_on_its_landmark(default_map) -> None:
    corner = default_map.landmark(0)
    for strategy in (MatchStrategy.SEPARATE, MatchStrategy.IDENTICAL, MatchStrategy.PARALLEL_BEST):
        matching = match_landmarks([(corner.position, LandmarkClass.CORNER)], default_map, strategy)
        assert matching.correspondences == ((0, 0),)
        assert matching.mean_error == pytest.approx(0.0)


def test_parallel_best_recovers_misclassified_observation(default_map) -> None:
    # a T-junction reported as a corner
    t_junction = default_map.landmark(12)
    corner = default_map.landmark(4)
    obs = [(t_junction.position, LandmarkClass.CORNER), (corner.position, LandmarkClass.CORNER)]
    separate = match_landmarks(obs, default_map, MatchStrategy.SEPARATE)
    best = match_landmarks(obs, default_map, MatchStrategy.PARALLEL_BEST)
    assert separate.mean_error > 0
    assert best.strategy_used is MatchStrategy.IDENTICAL
    assert best.correspondence_set() == {(0, 12), (1, 4)}
    assert best.mean_error == pytest.approx(0.0)


def test_parallel_best_prefers_separate_on_ties(default_map) -> None:
    obs = [(default_map.landmark(i).position, default_map.landmark(i).cls) for i in (0, 12, 27)]
    best = match_landmarks(obs, default_map)
    assert best.strategy_used is MatchStrategy.SEPARATE
    assert best.correspondence_set() == {(0, 0), (1, 12), (2, 27)}


def test_surplus_observations_share_the_unused_landmarks(default_map) -> None:
    posts = [default_map.landmark(i).position for i in (27, 28, 29, 30)]
    obs = [(p, LandmarkClass.GOAL_POST) for p in posts] + [(Point2(0.0, 0.0), LandmarkClass.GOAL_POST)]
    matching = match_landmarks(obs, default_map, MatchStrategy.SEPARATE)
    assert matching.unmatched == ()
    assert matching.size == 5
    assert (4, 22) in matching.correspondence_set()
    assert matching.degraded_classes == (LandmarkClass.GOAL_POST,)


def _misclassified_points(default_map) -> np.ndarray:
    return np.array([default_map.landmark(12).position.as_tuple(), default_map.landmark(4).position.as_tuple()])


def test_refit_error_ignores_rigid_motion(default_map) -> None:
    points = _misclassified_points(default_map)
    classes = [LandmarkClass.CORNER, LandmarkClass.CORNER]
    separate = match_points(points, classes, default_map, MatchStrategy.SEPARATE)
    moved = transform_array(Pose2D(0.7, -0.4, 0.3), points)
    assert refit_error(points, separate, default_map) > 0.1
    assert refit_error(moved, separate, default_map) == pytest.approx(refit_error(points, separate, default_map))


def test_parallel_best_keeps_the_lower_refit_error(default_map) -> None:
    rng = np.random.default_rng(5)
    classes = [lm.cls for lm in default_map.landmarks]
    for _ in range(10):
        keep = rng.choice(len(classes), size=6, replace=False)
        truth = default_map.positions[keep]
        points = transform_array(Pose2D(*rng.uniform(-0.4, 0.4, size=2), rng.uniform(-0.2, 0.2)), truth)
        picked = [classes[i] for i in keep]
        best = match_points(points, picked, default_map)
        separate = match_points(points, picked, default_map, MatchStrategy.SEPARATE)
        identical = match_points(points, picked, default_map, MatchStrategy.IDENTICAL)
        floor = min(refit_error(points, separate, default_map), refit_error(points, identical, default_map))
        assert best.refit_error <= floor + 1e-12


def test_class_missing_from_map_degrades_to_shared_pool() -> None:
    landmarks = tuple(
        Landmark(i, cls, Point2(x, y))
        for i, (cls, x, y) in enumerate(
            [
                (LandmarkClass.CORNER, 1.0, 1.0),
                (LandmarkClass.CORNER, -1.0, -1.0),
                (LandmarkClass.T_INTERSECTION, 2.0, 0.0),
                (LandmarkClass.T_INTERSECTION, -2.0, 0.0),
            ]
        )
    )
    field_map = FieldMap(landmarks, 14.0, 9.0)
    obs = [(Point2(1.0, 1.0), LandmarkClass.CORNER), (Point2(2.1, 0.0), LandmarkClass.GOAL_POST)]
    matching = match_landmarks(obs, field_map, MatchStrategy.SEPARATE)
    assert matching.degraded_classes == (LandmarkClass.GOAL_POST,)
    assert matching.correspondence_set() == {(0, 0), (1, 2)}


def test_nearest_allows_shared_landmarks(default_map) -> None:
    centre = default_map.landmark(22).position
    points = np.array([[centre.x + 0.05, centre.y], [centre.x - 0.05, centre.y]])
    matching = match_points(points, [], default_map, MatchStrategy.NEAREST)
    assert matching.correspondences == ((0, 22), (1, 22))


def test_empty_observation_list(default_map) -> None:
    with pytest.raises(AssignmentError):
        match_landmarks([], default_map)
