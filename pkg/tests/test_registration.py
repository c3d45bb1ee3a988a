import pytest

from core.errors import InsufficientLandmarksError, LocalizationError
from core.geometry import Pose2D, pose_error
from core.registration import RegistrationConfig, icp_localize, ilm_localize
from backend.simulation.simulator import ground_truth, observation_pairs

from conftest import REFERENCE_POSE, REFERENCE_VISIBLE


def test_reference_view(observe) -> None:
    assert len(observe()) == REFERENCE_VISIBLE


def test_exact_initial_pose(default_map, observe) -> None:
    obs = observe()
    result = ilm_localize(observation_pairs(obs), REFERENCE_POSE, default_map)
    assert result.correspondence_set() == ground_truth(obs)
    pos, ang = pose_error(result.pose, REFERENCE_POSE)
    assert pos == pytest.approx(0.0, abs=1e-9)
    assert ang == pytest.approx(0.0, abs=1e-9)
    assert result.converged
    assert result.mean_matching_error == pytest.approx(0.0, abs=1e-9)


def test_perturbed_initial_pose_converges(default_map, observe) -> None:
    obs = observe()
    initial = Pose2D(REFERENCE_POSE.t_x + 0.2, REFERENCE_POSE.t_y - 0.2, REFERENCE_POSE.theta + 0.05)
    cfg = RegistrationConfig(max_iteration=10)
    result = ilm_localize(observation_pairs(obs), initial, default_map, cfg)
    assert result.correspondence_set() == ground_truth(obs)
    pos, ang = pose_error(result.pose, REFERENCE_POSE)
    assert pos < 1e-6
    assert ang < 1e-6
    assert len(result.history) == result.iterations <= cfg.max_iteration
    assert result.correspondences_at(1) == result.history[0].correspondences
    assert result.correspondences_at(99) == result.correspondence_set()


def test_single_iteration_budget(default_map, observe) -> None:
    obs = observe()
    result = ilm_localize(observation_pairs(obs), REFERENCE_POSE, default_map, RegistrationConfig(max_iteration=1))
    assert result.iterations == 1
    assert len(result.history) == 1


def test_too_few_observations(default_map, observe) -> None:
    obs = observe()[:1]
    with pytest.raises(InsufficientLandmarksError):
        ilm_localize(observation_pairs(obs), REFERENCE_POSE, default_map)
    with pytest.raises(InsufficientLandmarksError):
        icp_localize([o.point for o in obs], REFERENCE_POSE, default_map)


def test_ilm_needs_classes(default_map, observe) -> None:
    points = [o.point for o in observe()]
    with pytest.raises(LocalizationError):
        ilm_localize(points, REFERENCE_POSE, default_map)


def test_icp_from_exact_pose(default_map, observe) -> None:
    obs = observe()
    result = icp_localize([o.point for o in obs], REFERENCE_POSE, default_map)
    assert result.method == "icp"
    assert result.correspondence_set() == ground_truth(obs)
    pos, _ = pose_error(result.pose, REFERENCE_POSE)
    assert pos == pytest.approx(0.0, abs=1e-9)


def test_config_validation() -> None:
    with pytest.raises(LocalizationError):
        RegistrationConfig(max_iteration=0)
    with pytest.raises(LocalizationError):
        RegistrationConfig(convergence_tol_pos=-1.0)
    assert RegistrationConfig(estimator="dlt").estimator.value == "dlt"


def test_result_as_dict(default_map, observe) -> None:
    result = ilm_localize(observation_pairs(observe()), REFERENCE_POSE, default_map)
    payload = result.as_dict()
    assert payload["method"] == "ilm"
    assert payload["dropped"] == []
    assert payload["t_x"] == pytest.approx(REFERENCE_POSE.t_x)
    assert payload["iterations"] == result.iterations
