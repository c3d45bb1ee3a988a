"""Counter-based random streams for reproducible simulations."""

from __future__ import annotations

import numpy as np

# stream identifiers, first key after the run seed
STREAM_OBSERVATION = 1
STREAM_ODOMETRY = 2
STREAM_POSES = 3
STREAM_EXPERIMENT = 4
STREAM_FILTER = 5


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for ``(seed, *keys)``.

    Streams with different keys are independent, so drawing from one never
    shifts another.
    """

    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seed and stream keys must be non-negative")
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])


__all__ = [
    "STREAM_EXPERIMENT",
    "STREAM_FILTER",
    "STREAM_ODOMETRY",
    "STREAM_OBSERVATION",
    "STREAM_POSES",
    "stream",
]
