"""Exception hierarchy shared by the localization core and its tooling."""

from __future__ import annotations

from typing import Any, Dict, Iterable


class LocalizationError(ValueError):
    """Raised when a localization step cannot be fulfilled.

    ``code`` is a stable identifier for callers (CLI exit handling, logs),
    ``context`` carries whatever the failing step knew at the time.
    """

    code = "localization_error"

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context)

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"code": self.code, "message": self.message}
        if self.context:
            payload["context"] = dict(self.context)
        return payload


class DegenerateGeometryError(LocalizationError):
    """The point configuration does not constrain a rigid transform."""

    code = "degenerate_geometry"


class InsufficientLandmarksError(LocalizationError):
    """Too few observations to estimate a pose."""

    code = "insufficient_landmarks"


class MapParseError(LocalizationError):
    code = "map_parse"


class MapValidationError(LocalizationError):
    """A field map violates one of its invariants."""

    code = "map_invalid"

    def __init__(self, message: str, *, landmark_ids: Iterable[int] = (), **context: Any) -> None:
        ids = sorted(int(i) for i in landmark_ids)
        super().__init__(message, landmark_ids=ids, **context)
        self.landmark_ids = ids


class AssignmentError(LocalizationError):
    code = "assignment_invalid"


class RansacFailure(LocalizationError):
    code = "ransac_no_consensus"


class GlobalLocalizationError(LocalizationError):
    code = "global_localization_failed"


class WeightError(LocalizationError):
    code = "weights_invalid"


class FilterError(LocalizationError):
    code = "innovation_singular"


class TrajectoryError(LocalizationError):
    code = "trajectory_invalid"


class RecordFormatError(LocalizationError):
    """A replay record file is malformed; ``line`` is 1-based."""

    code = "record_format"

    def __init__(self, message: str, *, line: int | None = None, **context: Any) -> None:
        super().__init__(message, line=line, **context)
        self.line = line


__all__ = [
    "AssignmentError",
    "DegenerateGeometryError",
    "FilterError",
    "GlobalLocalizationError",
    "InsufficientLandmarksError",
    "LocalizationError",
    "MapParseError",
    "MapValidationError",
    "RansacFailure",
    "RecordFormatError",
    "TrajectoryError",
    "WeightError",
]
