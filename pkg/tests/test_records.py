import pytest

from core.errors import RecordFormatError
from backend.simulation.records import parse_records, read_records, write_records
from backend.simulation.simulator import SensorModel, TrajectorySpec, default_waypoints, generate_trajectory


@pytest.fixture
def frames(default_map):
    spec = TrajectorySpec(default_waypoints(default_map), dt=0.1)
    return generate_trajectory(spec, default_map, SensorModel(obs_noise_width=0.1), seed=5)


def test_written_records_replay_identically(tmp_path, frames) -> None:
    path = write_records(tmp_path / "run" / "frames.jsonl", frames, dt=0.1, seed=5, config_hash="abc")
    header, loaded = read_records(path)
    assert header.seed == 5
    assert header.dt == pytest.approx(0.1)
    assert header.config_hash == "abc"
    assert loaded == frames


def test_truncated_file_names_last_line(tmp_path, frames) -> None:
    path = write_records(tmp_path / "frames.jsonl", frames[:5], dt=0.1)
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[-1] = lines[-1][: len(lines[-1]) // 2]
    with pytest.raises(RecordFormatError) as err:
        parse_records(lines, source="frames.jsonl")
    assert err.value.line == len(lines)
    assert f"frames.jsonl:{len(lines)}" in str(err.value)


def test_empty_and_header_only_files(tmp_path, frames) -> None:
    with pytest.raises(RecordFormatError, match="no frames"):
        parse_records([])
    path = write_records(tmp_path / "frames.jsonl", frames[:1], dt=0.1)
    header_line = path.read_text(encoding="utf-8").splitlines()[0]
    with pytest.raises(RecordFormatError, match="no frames"):
        parse_records([header_line])


def test_bad_header_and_missing_file(tmp_path) -> None:
    with pytest.raises(RecordFormatError) as err:
        parse_records(['{"format": "other", "version": 1, "dt": 0.1}'])
    assert err.value.line == 1
    with pytest.raises(RecordFormatError, match="not found"):
        read_records(tmp_path / "missing.jsonl")
