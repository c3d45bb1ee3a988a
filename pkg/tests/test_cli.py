import json

import pytest

from backend.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from backend.experiments.outputs import read_csv

QUIET_TRAJECTORY = {
    "trajectory": {"dt": 0.1, "obs_noise_width": 0.0, "odom_pos_noise": 0.0, "odom_ang_noise": 0.0},
}


def _config(tmp_path, payload) -> str:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def test_map_generate_then_validate(tmp_path, capsys) -> None:
    target = tmp_path / "maps" / "small.json"
    assert main(["map", "generate", "--out", str(target), "--length", "9", "--width", "6"]) == EXIT_OK
    assert main(["map", "validate", str(target)]) == EXIT_OK
    assert "31 landmarks" in capsys.readouterr().out


def test_missing_map_names_the_path(tmp_path, capsys) -> None:
    missing = tmp_path / "absent.json"
    assert main(["map", "validate", str(missing)]) == EXIT_FAILURE
    assert str(missing) in capsys.readouterr().err


def test_bench_instances_are_reproducible(tmp_path) -> None:
    for name in ("a", "b"):
        code = main(["bench", "--samples", "3", "--threads", "1", "--out", str(tmp_path / name)])
        assert code == EXIT_OK
    first = read_csv(tmp_path / "a" / "bench.csv")
    assert first == read_csv(tmp_path / "b" / "bench.csv")
    assert len(first) == 3
    methods = [row["method"] for row in read_csv(tmp_path / "a" / "bench_timing.csv")]
    assert methods == ["hungarian", "jv", "jv_modified", "dlt", "kabsch", "ilm_dlt", "ilm_kabsch"]
    assert (tmp_path / "a" / "metrics.prom").exists()


def test_invalid_sample_count_is_a_usage_error(tmp_path, capsys) -> None:
    assert main(["bench", "--samples", "0", "--out", str(tmp_path)]) == EXIT_USAGE
    assert "[ERROR]" in capsys.readouterr().err


def test_strategy_with_icp_is_rejected(tmp_path) -> None:
    code = main(["heatmap", "--method", "icp", "--strategy", "separate", "--out", str(tmp_path)])
    assert code == EXIT_USAGE


def test_single_budget_outside_heatmap(tmp_path) -> None:
    assert main(["rates", "--max-iter", "1", "2", "--out", str(tmp_path)]) == EXIT_USAGE


def test_heatmap_budgets_from_flags(tmp_path) -> None:
    cfg = _config(tmp_path, {"experiments": {"grid_resolution": 1.0}})
    out = tmp_path / "out"
    code = main(["heatmap", "--config", cfg, "--max-iter", "1", "8", "--threads", "2", "--out", str(out)])
    assert code == EXIT_OK
    coverage = read_csv(out / "coverage_ilm.csv")
    assert [row["budget"] for row in coverage] == ["1", "8"]
    summary = json.loads((out / "heatmap_ilm_summary.json").read_text(encoding="utf-8"))
    assert set(summary["metrics"]) == {"coverage_ilm_1", "coverage_ilm_8", "cells"}
    assert summary["experiment"] == "heatmap_ilm"


def test_trajectory_then_replay(tmp_path) -> None:
    cfg = _config(tmp_path, QUIET_TRAJECTORY)
    out = tmp_path / "out"
    assert main(["trajectory", "--config", cfg, "--method", "ilm", "--threads", "1", "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "trajectory_ilm_summary.json").read_text(encoding="utf-8"))
    assert summary["metrics"]["position_rmse"] <= 1e-6

    records = out / "trajectory_frames.jsonl"
    code = main(["replay", str(records), "--config", cfg, "--method", "ilm", "--threads", "1", "--out", str(out)])
    assert code == EXIT_OK
    assert read_csv(out / "replay_ilm.csv") == read_csv(out / "trajectory_ilm.csv")


def test_replay_rejects_bad_records(tmp_path, capsys) -> None:
    empty = tmp_path / "empty.jsonl"
    empty.write_text("", encoding="utf-8")
    assert main(["replay", str(empty), "--out", str(tmp_path)]) == EXIT_FAILURE
    assert "no frames" in capsys.readouterr().err

    truncated = tmp_path / "truncated.jsonl"
    truncated.write_text('{"format": "ilm-sim-frames", "version": 1, "dt": 0.1}\n{"index": 0, "ti', encoding="utf-8")
    assert main(["replay", str(truncated), "--out", str(tmp_path)]) == EXIT_FAILURE
    assert "truncated.jsonl:2" in capsys.readouterr().err


def test_help_exits_cleanly(capsys) -> None:
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "trajectory" in capsys.readouterr().out
