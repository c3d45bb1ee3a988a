"""Shared helpers for structured operation logging."""

from __future__ import annotations

import logging
from contextlib import contextmanager
from time import perf_counter
from typing import Dict, Generator

from core.errors import LocalizationError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _duration_ms(start: float) -> float:
    return round((perf_counter() - start) * 1000, 3)


def configure_logging(level: str | int = "WARNING") -> None:
    """Configure the root logger once for command-line use."""

    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


@contextmanager
def log_operation(
    logger: logging.Logger,
    operation: str,
    **context: object,
) -> Generator[Dict[str, object], None, None]:
    """Emit structured logs around an operation.

    Parameters
    ----------
    logger:
        Logger to emit records to.
    operation:
        Identifier for the operation (e.g. ``"heatmap"``).
    context:
        Additional key/value pairs to include in the log context. The yielded
        mapping can be mutated to add dynamic values before completion.
    """

    start = perf_counter()
    base: Dict[str, object] = {"operation": operation, **context}

    try:
        yield base
    except LocalizationError as exc:
        logger.warning(
            "%s failed",  # expected failures carry a code, no traceback
            operation,
            extra={
                **base,
                "status": "error",
                "error_code": exc.code,
                "duration_ms": _duration_ms(start),
                "error": exc.message,
            },
        )
        raise
    except Exception as exc:
        logger.exception(
            "%s failed",
            operation,
            extra={
                **base,
                "status": "error",
                "duration_ms": _duration_ms(start),
                "error": str(exc),
            },
        )
        raise
    else:
        logger.info(
            "%s completed",
            operation,
            extra={**base, "status": "success", "duration_ms": _duration_ms(start)},
        )


__all__ = ["configure_logging", "log_operation"]
