import logging

import pytest

from core.errors import InsufficientLandmarksError
from backend.logging_utils import log_operation
from backend.metrics import (
    REGISTRY,
    record_outlier_outcome,
    record_registration,
    record_rmse,
    record_solver,
    write_metrics,
)

LOGGER = logging.getLogger("tests.operations")


def test_log_operation_success(caplog) -> None:
    with caplog.at_level(logging.INFO, logger="tests.operations"):
        with log_operation(LOGGER, "heatmap", method="ilm") as ctx:
            ctx["cells"] = 4
    record = caplog.records[-1]
    assert record.getMessage() == "heatmap completed"
    assert record.status == "success"
    assert record.cells == 4
    assert record.method == "ilm"
    assert record.duration_ms >= 0


def test_log_operation_localization_error(caplog) -> None:
    with caplog.at_level(logging.WARNING, logger="tests.operations"):
        with pytest.raises(InsufficientLandmarksError):
            with log_operation(LOGGER, "trajectory"):
                raise InsufficientLandmarksError("too few")
    record = caplog.records[-1]
    assert record.levelno == logging.WARNING
    assert record.error_code == "insufficient_landmarks"
    assert record.exc_info is None


def test_log_operation_unexpected_error(caplog) -> None:
    with caplog.at_level(logging.ERROR, logger="tests.operations"):
        with pytest.raises(RuntimeError):
            with log_operation(LOGGER, "bench"):
                raise RuntimeError("boom")
    record = caplog.records[-1]
    assert record.status == "error"
    assert record.exc_info is not None


def _sample(name: str, labels: dict) -> float:
    return REGISTRY.get_sample_value(name, labels) or 0.0


def test_counters_and_gauges() -> None:
    before = _sample("ilm_registration_total", {"method": "ilm", "converged": "true"})
    record_registration("ilm", True)
    assert _sample("ilm_registration_total", {"method": "ilm", "converged": "true"}) == before + 1

    before = _sample("ilm_outlier_drops_total", {"outcome": "refined"})
    record_outlier_outcome("refined")
    assert _sample("ilm_outlier_drops_total", {"outcome": "refined"}) == before + 1

    record_rmse("ilm+pf", 0.25, 0.05)
    assert _sample("ilm_trajectory_rmse", {"method": "ilm+pf", "component": "position"}) == pytest.approx(0.25)

    before = _sample("ilm_solver_seconds_count", {"method": "jv"})
    record_solver("jv", 0.0002)
    assert _sample("ilm_solver_seconds_count", {"method": "jv"}) == before + 1


def test_write_metrics(tmp_path) -> None:
    record_solver("hungarian", 0.001)
    path = write_metrics(tmp_path / "out" / "metrics.prom")
    text = path.read_text(encoding="utf-8")
    assert "ilm_solver_seconds_bucket" in text
