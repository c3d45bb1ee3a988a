import numpy as np
import pytest

from core.errors import GlobalLocalizationError, LocalizationError, RansacFailure
from core.field_map import LandmarkClass
from core.geometry import Point2, Pose2D, pose_error, transform_array
from core.registration import RegistrationConfig, ilm_localize
from core.robustness import (
    HypothesisSet,
    OutlierConfig,
    RansacResult,
    default_hypotheses,
    drop_outliers,
    global_localize,
    global_localize_detailed,
    ransac_pose,
)
from backend.simulation.simulator import SensorModel, observation_pairs

from conftest import REFERENCE_POSE

TRUE_POSE = Pose2D(0.5, -1.0, 0.8)


def _contaminated_pairs():
    rng = np.random.default_rng(2)
    body = rng.uniform(-4.0, 4.0, size=(10, 2))
    world = transform_array(TRUE_POSE, body)
    world[3] += (3.0, -2.0)
    world[7] += (-4.0, 1.5)
    return body, world


def test_ransac_separates_outliers() -> None:
    body, world = _contaminated_pairs()
    pose, mask = ransac_pose(body, world)
    assert mask.tolist() == [i not in (3, 7) for i in range(10)]
    pos, ang = pose_error(pose, TRUE_POSE)
    assert pos == pytest.approx(0.0, abs=1e-9)
    assert ang == pytest.approx(0.0, abs=1e-9)


def test_ransac_ignores_input_order() -> None:
    body, world = _contaminated_pairs()
    pose, mask = ransac_pose(body, world)
    perm = np.random.default_rng(9).permutation(10)
    shuffled_pose, shuffled_mask = ransac_pose(body[perm], world[perm])
    assert shuffled_mask.tolist() == mask[perm].tolist()
    assert shuffled_pose.as_tuple() == pytest.approx(pose.as_tuple())


def test_ransac_needs_two_pairs() -> None:
    with pytest.raises(RansacFailure):
        ransac_pose(np.zeros((1, 2)), np.zeros((1, 2)))


def test_outlier_config_validation() -> None:
    with pytest.raises(LocalizationError):
        OutlierConfig(min_sample=3)
    with pytest.raises(LocalizationError):
        OutlierConfig(error_threshold=0.0)


def _with_fake_cross(obs):
    return observation_pairs(obs) + [(Point2(-20.0, 0.0), LandmarkClass.CROSS)]


def test_good_result_passes_through(default_map, observe) -> None:
    pairs = observation_pairs(observe())
    result = ilm_localize(pairs, REFERENCE_POSE, default_map)
    assert drop_outliers(pairs, result, default_map) is result


def test_gross_outlier_is_dropped(default_map, observe) -> None:
    obs = _with_fake_cross(observe())
    reg_cfg = RegistrationConfig(max_iteration=1)
    result = ilm_localize(obs, REFERENCE_POSE, default_map, reg_cfg)
    assert result.mean_matching_error > 0.05
    refined = drop_outliers(obs, result, default_map, OutlierConfig(error_threshold=0.05), reg_cfg)
    assert refined.dropped == (len(obs) - 1,)
    assert not refined.low_confidence
    pos, ang = pose_error(refined.pose, REFERENCE_POSE)
    assert pos == pytest.approx(0.0, abs=1e-6)
    assert ang == pytest.approx(0.0, abs=1e-6)


def test_few_landmarks_flagged_low_confidence(default_map, observe) -> None:
    obs = _with_fake_cross(observe()[:4])
    result = ilm_localize(obs, REFERENCE_POSE, default_map, RegistrationConfig(max_iteration=1))
    refined = drop_outliers(obs, result, default_map, OutlierConfig(error_threshold=0.05))
    assert refined.low_confidence
    assert refined.pose == result.pose


def test_scrambled_observations_never_raise_the_error(default_map, observe) -> None:
    pairs = observation_pairs(observe())
    rng = np.random.default_rng(11)
    for trial in range(20):
        shifts = rng.uniform(-3.0, 3.0, size=(len(pairs), 2))
        scrambled = [(Point2(p.x + dx, p.y + dy), cls) for (p, cls), (dx, dy) in zip(pairs, shifts)]
        result = ilm_localize(scrambled, REFERENCE_POSE, default_map, RegistrationConfig(max_iteration=1))
        refined = drop_outliers(scrambled, result, default_map, OutlierConfig(error_threshold=0.05), seed=trial)
        assert np.isfinite(refined.mean_matching_error)
        assert refined.mean_matching_error <= result.mean_matching_error + 1e-12


def test_no_inliers_after_rematch_keeps_the_input(default_map, observe, monkeypatch) -> None:
    obs = _with_fake_cross(observe())
    result = ilm_localize(obs, REFERENCE_POSE, default_map, RegistrationConfig(max_iteration=1))

    def far_consensus(pairs, cfg, seed=0):
        return RansacResult(Pose2D(50.0, 50.0, 0.0), np.ones(len(pairs), dtype=bool), 0.0, 1)

    monkeypatch.setattr("core.robustness.ransac_pose_detailed", far_consensus)
    refined = drop_outliers(obs, result, default_map, OutlierConfig(error_threshold=0.05))
    assert refined.low_confidence
    assert refined.pose == result.pose
    assert refined.mean_matching_error == result.mean_matching_error


def test_default_hypotheses_on_own_touch_line(default_map) -> None:
    poses = default_hypotheses(default_map)
    assert len(poses) == 6
    assert all(p.t_x < 0 and p.t_y == pytest.approx(-4.5) for p in poses)
    with pytest.raises(LocalizationError):
        HypothesisSet(())


def test_global_localization_from_nearby_hypothesis(default_map, observe) -> None:
    hyp = HypothesisSet((Pose2D(1.1, 0.9, 0.05), Pose2D(0.9, 1.2, -0.05)))
    fix = global_localize_detailed([observation_pairs(observe())], default_map, hyp)
    assert fix.frame_index == 0
    assert fix.hypothesis_index in (0, 1)
    pos, _ = pose_error(fix.pose, REFERENCE_POSE)
    assert pos == pytest.approx(0.0, abs=1e-6)
    assert len(fix.errors) == 2


def test_first_frame_with_enough_landmarks(default_map, observe) -> None:
    pairs = observation_pairs(observe())
    hyp = HypothesisSet((REFERENCE_POSE,))
    fix = global_localize_detailed([pairs[:3], pairs], default_map, hyp, max_workers=2)
    assert fix.frame_index == 1


def test_ties_go_to_the_lower_index(default_map, observe) -> None:
    hyp = HypothesisSet((REFERENCE_POSE, REFERENCE_POSE))
    fix = global_localize_detailed([observation_pairs(observe())], default_map, hyp)
    assert fix.hypothesis_index == 0


def test_global_localization_failures(default_map, observe) -> None:
    noisy = observation_pairs(observe(sensor=SensorModel(obs_noise_width=0.1)))
    strict = HypothesisSet((REFERENCE_POSE,), max_error_threshold=1e-6)
    with pytest.raises(GlobalLocalizationError):
        global_localize([noisy], default_map, strict)
    with pytest.raises(GlobalLocalizationError):
        global_localize([noisy[:3]], default_map, HypothesisSet((REFERENCE_POSE,)))
