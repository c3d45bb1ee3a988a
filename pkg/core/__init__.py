"""Landmark-based 2D localization core: geometry, matching, registration and filters."""

from __future__ import annotations

from importlib import import_module
from typing import TYPE_CHECKING, Any

_SUBMODULES = (
    "assignment",
    "errors",
    "field_map",
    "fusion",
    "geometry",
    "pose_estimation",
    "registration",
    "robustness",
)

__all__ = list(_SUBMODULES)

if TYPE_CHECKING:  # pragma: no cover - for static analyzers only
    from . import assignment, errors, field_map, fusion, geometry, pose_estimation, registration, robustness


def __getattr__(name: str) -> Any:
    """Dynamically import submodules on first access."""

    if name in _SUBMODULES:
        module = import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
