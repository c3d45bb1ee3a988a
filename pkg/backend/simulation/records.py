"""Line-delimited JSON record files of simulation frames, for replay."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, List, Literal, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.errors import RecordFormatError
from core.field_map import LandmarkClass
from core.fusion import ControlInput
from core.geometry import Point2, Pose2D

from .simulator import SimFrame, SimObservation

RECORD_FORMAT = "ilm-sim-frames"
RECORD_VERSION = 1


class RecordHeader(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: Literal["ilm-sim-frames"]
    version: Literal[1]
    dt: float = Field(gt=0)
    seed: int = 0
    config_hash: str | None = None


class FrameRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    index: int = Field(ge=0)
    time: float = Field(ge=0)
    true_pose: Tuple[float, float, float]
    control: Tuple[float, float, float]
    true_control: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    observations: List[Tuple[float, float, LandmarkClass, int]] = Field(default_factory=list)

    @classmethod
    def from_frame(cls, frame: SimFrame) -> "FrameRecord":
        return cls(
            index=frame.index,
            time=frame.time,
            true_pose=frame.true_pose.as_tuple(),
            control=(frame.control.v_f, frame.control.v_s, frame.control.omega),
            true_control=(frame.true_control.v_f, frame.true_control.v_s, frame.true_control.omega),
            observations=[(o.point.x, o.point.y, o.cls, o.landmark_id) for o in frame.observations],
        )

    def to_frame(self) -> SimFrame:
        return SimFrame(
            index=self.index,
            time=self.time,
            true_pose=Pose2D(*self.true_pose),
            observations=tuple(SimObservation(Point2(x, y), cls, lid) for x, y, cls, lid in self.observations),
            control=ControlInput(*self.control),
            true_control=ControlInput(*self.true_control),
        )


def _dump(model: BaseModel) -> str:
    return json.dumps(model.model_dump(mode="json"), separators=(",", ":"))


def write_records(
    path: Path | str,
    frames: Sequence[SimFrame],
    *,
    dt: float,
    seed: int = 0,
    config_hash: str | None = None,
) -> Path:
    """Write a header line followed by one JSON object per frame."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = RecordHeader(format=RECORD_FORMAT, version=RECORD_VERSION, dt=dt, seed=seed, config_hash=config_hash)
    lines = [_dump(header)] + [_dump(FrameRecord.from_frame(f)) for f in frames]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _first_error(exc: ValidationError) -> str:
    first = exc.errors()[0]
    where = ".".join(str(part) for part in first.get("loc", ()))
    return f"{where}: {first['msg']}" if where else str(first["msg"])


def parse_records(lines: Iterable[str], source: str = "<records>") -> Tuple[RecordHeader, List[SimFrame]]:
    header: RecordHeader | None = None
    frames: List[SimFrame] = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"{source}:{lineno}: invalid JSON ({exc.msg})", line=lineno) from exc
        try:
            if header is None:
                header = RecordHeader.model_validate(payload)
                continue
            frames.append(FrameRecord.model_validate(payload).to_frame())
        except ValidationError as exc:
            raise RecordFormatError(f"{source}:{lineno}: {_first_error(exc)}", line=lineno) from exc
    if header is None or not frames:
        raise RecordFormatError(f"{source}: no frames")
    return header, frames


def read_records(path: Path | str) -> Tuple[RecordHeader, List[SimFrame]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise RecordFormatError(f"record file not found: {path}") from exc
    return parse_records(text.splitlines(), source=str(path))


__all__ = [
    "FrameRecord",
    "RECORD_FORMAT",
    "RECORD_VERSION",
    "RecordHeader",
    "parse_records",
    "read_records",
    "write_records",
]
