"""Prometheus metrics for localization runs, exported as a textfile."""
from __future__ import annotations

from pathlib import Path

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

REGISTRY = CollectorRegistry(auto_describe=True)

SOLVER_SECONDS = Histogram(
    "ilm_solver_seconds",
    "Wall time of one solver or estimator call",
    ("method",),
    buckets=(0.00001, 0.00005, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1),
    registry=REGISTRY,
)

REGISTRATION_TOTAL = Counter(
    "ilm_registration_total",
    "Registration runs by method and convergence",
    ("method", "converged"),
    registry=REGISTRY,
)

OUTLIER_DROPS_TOTAL = Counter(
    "ilm_outlier_drops_total",
    "Outlier dropping outcomes",
    ("outcome",),
    registry=REGISTRY,
)

TRAJECTORY_RMSE = Gauge(
    "ilm_trajectory_rmse",
    "RMSE of the most recent trajectory run per method",
    ("method", "component"),
    registry=REGISTRY,
)


def record_solver(method: str, duration_seconds: float) -> None:
    """Record one timed solver call."""
    SOLVER_SECONDS.labels(method=method).observe(duration_seconds)


def record_registration(method: str, converged: bool) -> None:
    REGISTRATION_TOTAL.labels(method=method, converged=str(bool(converged)).lower()).inc()


def record_outlier_outcome(outcome: str) -> None:
    """Count a ``pass_through``, ``low_confidence`` or ``refined`` outcome."""
    OUTLIER_DROPS_TOTAL.labels(outcome=outcome).inc()


def record_rmse(method: str, position: float, orientation: float) -> None:
    TRAJECTORY_RMSE.labels(method=method, component="position").set(position)
    TRAJECTORY_RMSE.labels(method=method, component="orientation").set(orientation)


def write_metrics(path: Path | str) -> Path:
    """Write the registry in the Prometheus text format."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)
    return path


__all__ = [
    "REGISTRY",
    "record_outlier_outcome",
    "record_registration",
    "record_rmse",
    "record_solver",
    "write_metrics",
]
