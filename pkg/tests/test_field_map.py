import json
import logging

import pytest

from core.errors import MapParseError, MapValidationError
from core.field_map import (
    DEFAULT_MAP_PATH,
    LandmarkClass,
    generate_default_map,
    load_default_map,
    load_map,
    parse_map,
    save_map,
    symmetry_violations,
)


def _doc(landmarks, **overrides) -> str:
    payload = {"version": 1, "units": "meters", "field_length": 14.0, "field_width": 9.0, "landmarks": landmarks}
    payload.update(overrides)
    return json.dumps(payload)


SQUARE = [
    {"id": 0, "class": "L", "x": 1.0, "y": 1.0},
    {"id": 1, "class": "L", "x": -1.0, "y": -1.0},
    {"id": 2, "class": "T", "x": 2.0, "y": 0.0},
    {"id": 3, "class": "T", "x": -2.0, "y": 0.0},
]


def test_default_map_layout(default_map) -> None:
    assert len(default_map.landmarks) == 31
    counts = {cls: len(idx) for cls, idx in default_map.class_indices.items()}
    assert counts == {
        LandmarkClass.CORNER: 12,
        LandmarkClass.T_INTERSECTION: 10,
        LandmarkClass.CROSS: 5,
        LandmarkClass.GOAL_POST: 4,
    }
    assert symmetry_violations(default_map) == []
    assert sorted(int(i) for i in default_map.ids) == list(range(31))


def test_scaled_map_keeps_landmarks_inside(default_map) -> None:
    small = generate_default_map(9.0, 6.0)
    assert len(small.landmarks) == len(default_map.landmarks)
    assert all(small.contains(lm.position.x, lm.position.y) for lm in small.landmarks)


def test_shipped_map_matches_generated(default_map) -> None:
    assert DEFAULT_MAP_PATH.exists()
    shipped = load_default_map()
    assert shipped.positions.tolist() == default_map.positions.tolist()
    assert shipped.classes == default_map.classes


def test_save_and_load(tmp_path, default_map) -> None:
    path = save_map(default_map, tmp_path / "maps" / "field.json")
    loaded = load_map(path)
    assert loaded.positions.tolist() == default_map.positions.tolist()
    assert loaded.field_length == default_map.field_length


def test_lower_case_class_is_accepted() -> None:
    landmarks = [dict(lm, **{"class": lm["class"].lower()}) for lm in SQUARE]
    field_map = parse_map(_doc(landmarks))
    assert field_map.landmark(0).cls is LandmarkClass.CORNER


def test_duplicate_ids_are_named() -> None:
    landmarks = SQUARE + [{"id": 2, "class": "X", "x": 0.0, "y": 0.0}]
    with pytest.raises(MapValidationError) as err:
        parse_map(_doc(landmarks))
    assert err.value.landmark_ids == [2]
    assert err.value.code == "map_invalid"


def test_too_few_landmarks() -> None:
    with pytest.raises(MapValidationError):
        parse_map(_doc(SQUARE[:3]))


def test_empty_map() -> None:
    with pytest.raises(MapValidationError):
        parse_map(_doc([]))


def test_landmark_outside_field() -> None:
    landmarks = SQUARE + [{"id": 9, "class": "X", "x": 12.0, "y": 0.0}]
    with pytest.raises(MapValidationError) as err:
        parse_map(_doc(landmarks))
    assert err.value.landmark_ids == [9]


def test_asymmetric_map_only_warns(caplog) -> None:
    landmarks = SQUARE + [{"id": 4, "class": "X", "x": 3.0, "y": 1.0}]
    with caplog.at_level(logging.WARNING, logger="core.field_map"):
        field_map = parse_map(_doc(landmarks))
    assert len(field_map.landmarks) == 5
    assert any("not symmetric" in rec.getMessage() for rec in caplog.records)


def test_wrong_units_rejected() -> None:
    with pytest.raises(MapParseError):
        parse_map(_doc(SQUARE, units="feet"))


def test_unknown_field_rejected() -> None:
    with pytest.raises(MapParseError):
        parse_map(_doc(SQUARE, colour="green"))


def test_invalid_json_names_source() -> None:
    with pytest.raises(MapParseError) as err:
        parse_map("{not json", source="broken.json")
    assert "broken.json" in str(err.value)


def test_missing_file_names_path(tmp_path) -> None:
    missing = tmp_path / "nowhere.json"
    with pytest.raises(MapParseError) as err:
        load_map(missing)
    assert str(missing) in str(err.value)
