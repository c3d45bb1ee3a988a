import sys
from pathlib import Path
from typing import Callable, List

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from core.field_map import FieldMap, generate_default_map  # noqa: E402  (import after sys.path tweak)
from core.geometry import Pose2D  # noqa: E402
from backend.simulation.simulator import SensorModel, SimObservation, visible_landmarks  # noqa: E402

# facing +x from (1, 1): 6 corners, 4 T-junctions, 1 cross, 2 goal posts in view
REFERENCE_POSE = Pose2D(1.0, 1.0, 0.0)
REFERENCE_VISIBLE = 13


@pytest.fixture(scope="session")
def default_map() -> FieldMap:
    return generate_default_map()


@pytest.fixture
def clean_sensor() -> SensorModel:
    """Noise-free, misclassification-free sensor with the default FOV and range."""
    return SensorModel()


@pytest.fixture
def observe(default_map: FieldMap, clean_sensor: SensorModel) -> Callable[..., List[SimObservation]]:
    def _observe(
        pose: Pose2D = REFERENCE_POSE,
        sensor: SensorModel | None = None,
        seed: int = 0,
        frame: int = 0,
    ) -> List[SimObservation]:
        return visible_landmarks(pose, default_map, sensor or clean_sensor, seed, frame)

    return _observe
