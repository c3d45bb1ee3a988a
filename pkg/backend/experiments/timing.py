"""Wall-clock timing of solver and estimator calls."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple, TypeVar

import numpy as np

from backend.metrics import record_solver

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class BenchRecord:
    method: str
    samples: int
    mean_ms: float
    median_ms: float
    p99_ms: float

    def as_dict(self) -> Dict[str, object]:
        return {
            "method": self.method,
            "samples": self.samples,
            "mean_ms": self.mean_ms,
            "median_ms": self.median_ms,
            "p99_ms": self.p99_ms,
        }

    def as_row(self) -> Tuple[object, ...]:
        return (self.method, self.samples, self.mean_ms, self.median_ms, self.p99_ms)


BENCH_HEADER = ("method", "samples", "mean_ms", "median_ms", "p99_ms")


def time_calls(
    method: str,
    fn: Callable[[T], R],
    inputs: Sequence[T],
    warmup: int = 10,
) -> Tuple[BenchRecord, List[R]]:
    """Call ``fn`` on every input, timing each call with ``perf_counter``.

    The first ``warmup`` inputs are run once untimed beforehand.
    """

    if not inputs:
        raise ValueError("nothing to time")
    for item in inputs[:warmup]:
        fn(item)
    durations = np.empty(len(inputs))
    outputs: List[R] = []
    for idx, item in enumerate(inputs):
        start = time.perf_counter()
        result = fn(item)
        elapsed = time.perf_counter() - start
        durations[idx] = elapsed
        outputs.append(result)
        record_solver(method, elapsed)
    ms = durations * 1000.0
    record = BenchRecord(
        method=method,
        samples=len(inputs),
        mean_ms=float(ms.mean()),
        median_ms=float(np.median(ms)),
        p99_ms=float(np.percentile(ms, 99)),
    )
    return record, outputs


__all__ = ["BENCH_HEADER", "BenchRecord", "time_calls"]
