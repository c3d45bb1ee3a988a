"""A-priori landmark map of the field, its JSON file format and the default layout."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from scipy.spatial import cKDTree

from .errors import MapParseError, MapValidationError
from .geometry import Point2

LOGGER = logging.getLogger(__name__)

MAP_SCHEMA_VERSION = 1
FIELD_MARGIN = 1.0
MIN_LANDMARKS = 4

# RoboCup Humanoid AdultSize layout, meters from the field center.
ADULT_FIELD_LENGTH = 14.0
ADULT_FIELD_WIDTH = 9.0
ADULT_GOAL_AREA_X = 6.0
ADULT_GOAL_AREA_HALF_WIDTH = 2.0
ADULT_PENALTY_AREA_X = 4.0
ADULT_PENALTY_AREA_HALF_WIDTH = 3.0
ADULT_PENALTY_MARK_X = 4.9
ADULT_CENTER_CIRCLE_RADIUS = 1.5
ADULT_GOAL_POST_Y = 1.3


class LandmarkClass(str, Enum):
    """Detectable field feature types."""

    CORNER = "L"
    T_INTERSECTION = "T"
    CROSS = "X"
    GOAL_POST = "G"

    @classmethod
    def parse(cls, value: "str | LandmarkClass") -> "LandmarkClass":
        if isinstance(value, LandmarkClass):
            return value
        return cls(str(value).strip().upper())


LANDMARK_CLASSES: Tuple[LandmarkClass, ...] = tuple(LandmarkClass)


@dataclass(frozen=True)
class Landmark:
    id: int
    cls: LandmarkClass
    position: Point2

    def as_dict(self) -> Dict[str, object]:
        return {"id": self.id, "class": self.cls.value, "x": self.position.x, "y": self.position.y}


@dataclass(frozen=True)
class FieldMap:
    """Immutable landmark map, world frame centered on the field center."""

    landmarks: Tuple[Landmark, ...]
    field_length: float
    field_width: float

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([[lm.position.x, lm.position.y] for lm in self.landmarks], dtype=float)

    @cached_property
    def ids(self) -> np.ndarray:
        return np.array([lm.id for lm in self.landmarks], dtype=int)

    @cached_property
    def classes(self) -> Tuple[LandmarkClass, ...]:
        return tuple(lm.cls for lm in self.landmarks)

    @cached_property
    def class_indices(self) -> Dict[LandmarkClass, np.ndarray]:
        """Map each class to the row indices of its landmarks (possibly empty)."""

        out: Dict[LandmarkClass, np.ndarray] = {}
        for cls in LANDMARK_CLASSES:
            out[cls] = np.array([i for i, lm in enumerate(self.landmarks) if lm.cls is cls], dtype=int)
        return out

    @cached_property
    def kdtree(self) -> cKDTree:
        return cKDTree(self.positions)

    @cached_property
    def index_of(self) -> Dict[int, int]:
        return {lm.id: idx for idx, lm in enumerate(self.landmarks)}

    def landmark(self, landmark_id: int) -> Landmark:
        return self.landmarks[self.index_of[int(landmark_id)]]

    def contains(self, x: float, y: float, margin: float = 0.0) -> bool:
        return abs(x) <= self.field_length / 2 + margin and abs(y) <= self.field_width / 2 + margin

    def as_dict(self) -> Dict[str, object]:
        return {
            "version": MAP_SCHEMA_VERSION,
            "units": "meters",
            "field_length": self.field_length,
            "field_width": self.field_width,
            "landmarks": [lm.as_dict() for lm in self.landmarks],
        }


# ----------------------------------------------------------------------
# file schema


class LandmarkRecord(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    id: int
    cls: LandmarkClass = Field(alias="class")
    x: float
    y: float

    @field_validator("cls", mode="before")
    @classmethod
    def _upper_class(cls, value: object) -> object:
        return value.strip().upper() if isinstance(value, str) else value


class MapDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: int = MAP_SCHEMA_VERSION
    units: str = "meters"
    field_length: float = Field(gt=0)
    field_width: float = Field(gt=0)
    landmarks: List[LandmarkRecord]

    @field_validator("version")
    @classmethod
    def _known_version(cls, value: int) -> int:
        if value != MAP_SCHEMA_VERSION:
            raise ValueError(f"unsupported map schema version {value}")
        return value

    @field_validator("units")
    @classmethod
    def _meters_only(cls, value: str) -> str:
        if value != "meters":
            raise ValueError("map units must be 'meters'")
        return value


# ----------------------------------------------------------------------
# validation


def symmetry_violations(field_map: FieldMap, tol: float = 1e-9) -> List[int]:
    """Return ids of landmarks without a same-class twin at ``-p``."""

    missing: List[int] = []
    positions = field_map.positions
    for idx, lm in enumerate(field_map.landmarks):
        mirrored = -positions[idx]
        same = field_map.class_indices[lm.cls]
        dists = np.linalg.norm(positions[same] - mirrored, axis=1)
        if dists.size == 0 or float(dists.min()) > tol:
            missing.append(lm.id)
    return missing


def validate_map(field_map: FieldMap) -> FieldMap:
    """Check map invariants; asymmetry is logged, everything else raises."""

    if not field_map.landmarks:
        raise MapValidationError("map has no landmarks")
    if len(field_map.landmarks) < MIN_LANDMARKS:
        raise MapValidationError(
            f"map needs at least {MIN_LANDMARKS} landmarks, got {len(field_map.landmarks)}",
            landmark_ids=[lm.id for lm in field_map.landmarks],
        )
    seen: set[int] = set()
    duplicates: set[int] = set()
    for lm in field_map.landmarks:
        if lm.id in seen:
            duplicates.add(lm.id)
        seen.add(lm.id)
    if duplicates:
        ids = ", ".join(str(i) for i in sorted(duplicates))
        raise MapValidationError(f"duplicate landmark id(s): {ids}", landmark_ids=duplicates)

    outside = [
        lm.id
        for lm in field_map.landmarks
        if not field_map.contains(lm.position.x, lm.position.y, margin=FIELD_MARGIN)
    ]
    if outside:
        ids = ", ".join(str(i) for i in outside)
        raise MapValidationError(f"landmark(s) outside field bounds: {ids}", landmark_ids=outside)

    asymmetric = symmetry_violations(field_map)
    if asymmetric:
        LOGGER.warning(
            "map is not symmetric under 180 degree rotation",
            extra={"landmark_ids": asymmetric},
        )
    return field_map


def map_from_document(doc: MapDocument) -> FieldMap:
    landmarks = tuple(Landmark(rec.id, rec.cls, Point2(rec.x, rec.y)) for rec in doc.landmarks)
    return validate_map(
        FieldMap(landmarks=landmarks, field_length=doc.field_length, field_width=doc.field_width)
    )


def serialize_map(field_map: FieldMap) -> str:
    return json.dumps(field_map.as_dict(), indent=2) + "\n"


def save_map(field_map: FieldMap, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_map(field_map), encoding="utf-8")
    return path


def parse_map(text: str, *, source: str = "<string>") -> FieldMap:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapParseError(f"{source}: invalid JSON ({exc.msg} at line {exc.lineno})", path=source) from exc
    try:
        doc = MapDocument.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ()))
        raise MapParseError(f"{source}: {where}: {first['msg']}", path=source) from exc
    return map_from_document(doc)


def load_map(path: Path | str) -> FieldMap:
    """Read and validate a map file."""

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise MapParseError(f"map file not found: {path}", path=str(path)) from exc
    return parse_map(text, source=str(path))


# ----------------------------------------------------------------------
# default layout


def _symmetric(points: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    """Return ``points`` together with their 180 degree rotations, without duplicates."""

    out: List[Tuple[float, float]] = []
    for x, y in points:
        for candidate in ((x, y), (-x, -y)):
            normalised = (candidate[0] + 0.0, candidate[1] + 0.0)
            if normalised not in out:
                out.append(normalised)
    return out


def generate_default_map(field_length: float = ADULT_FIELD_LENGTH, field_width: float = ADULT_FIELD_WIDTH) -> FieldMap:
    """Build the landmark set of an AdultSize-style field scaled to the given size.

    Along-field distances scale with ``field_length / 14``, across-field
    distances with ``field_width / 9``.
    """

    if not (field_length > 0 and field_width > 0):
        raise MapValidationError(
            "field dimensions must be positive",
            field_length=field_length,
            field_width=field_width,
        )

    sx = field_length / ADULT_FIELD_LENGTH
    sy = field_width / ADULT_FIELD_WIDTH
    half_l = field_length / 2
    half_w = field_width / 2
    goal_area_x = ADULT_GOAL_AREA_X * sx
    goal_area_y = ADULT_GOAL_AREA_HALF_WIDTH * sy
    penalty_area_x = ADULT_PENALTY_AREA_X * sx
    penalty_area_y = ADULT_PENALTY_AREA_HALF_WIDTH * sy
    penalty_mark_x = ADULT_PENALTY_MARK_X * sx
    circle_r = ADULT_CENTER_CIRCLE_RADIUS * sy
    post_y = ADULT_GOAL_POST_Y * sy

    layout: List[Tuple[LandmarkClass, List[Tuple[float, float]]]] = [
        (
            LandmarkClass.CORNER,
            _symmetric(
                [
                    (half_l, half_w),
                    (half_l, -half_w),
                    (goal_area_x, goal_area_y),
                    (goal_area_x, -goal_area_y),
                    (penalty_area_x, penalty_area_y),
                    (penalty_area_x, -penalty_area_y),
                ]
            ),
        ),
        (
            LandmarkClass.T_INTERSECTION,
            _symmetric(
                [
                    (half_l, goal_area_y),
                    (half_l, -goal_area_y),
                    (half_l, penalty_area_y),
                    (half_l, -penalty_area_y),
                    (0.0, half_w),
                ]
            ),
        ),
        (
            LandmarkClass.CROSS,
            _symmetric([(0.0, 0.0), (penalty_mark_x, 0.0), (0.0, circle_r)]),
        ),
        (
            LandmarkClass.GOAL_POST,
            _symmetric([(half_l, post_y), (half_l, -post_y)]),
        ),
    ]

    landmarks: List[Landmark] = []
    for cls, points in layout:
        for x, y in points:
            landmarks.append(Landmark(len(landmarks), cls, Point2(x, y)))
    return validate_map(
        FieldMap(landmarks=tuple(landmarks), field_length=float(field_length), field_width=float(field_width))
    )


DEFAULT_MAP_PATH = Path(__file__).resolve().parents[1] / "data" / "maps" / "default_field.json"


def load_default_map() -> FieldMap:
    """Return the shipped map file if present, else the generated default."""

    if DEFAULT_MAP_PATH.exists():
        return load_map(DEFAULT_MAP_PATH)
    return generate_default_map()


__all__ = [
    "DEFAULT_MAP_PATH",
    "FieldMap",
    "LANDMARK_CLASSES",
    "Landmark",
    "LandmarkClass",
    "MapDocument",
    "generate_default_map",
    "load_default_map",
    "load_map",
    "parse_map",
    "save_map",
    "serialize_map",
    "symmetry_violations",
    "validate_map",
]
