"""CSV tables and JSON summaries written by the experiments."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence


def _clean(value: Any) -> Any:
    """Make floats JSON-safe: non-finite values become ``None``."""

    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, Mapping):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    return str(value)


@dataclass
class Table:
    """Column header plus rows, in write order."""

    header: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.header):
            raise ValueError(f"row has {len(values)} values, header has {len(self.header)}")
        self.rows.append(values)

    def column(self, name: str) -> List[Any]:
        idx = list(self.header).index(name)
        return [row[idx] for row in self.rows]

    def records(self) -> List[Dict[str, Any]]:
        return [dict(zip(self.header, row)) for row in self.rows]


def write_csv(path: Path | str, table: Table) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path: Path | str) -> List[Dict[str, str]]:
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def write_summary(
    path: Path | str,
    *,
    experiment: str,
    config_hash: str,
    seed: int,
    metrics: Mapping[str, Any],
) -> Path:
    """Write ``{experiment, config_hash, seed, metrics}`` with sorted keys."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "experiment": experiment,
        "config_hash": config_hash,
        "seed": seed,
        "metrics": _clean(dict(metrics)),
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


__all__ = ["Table", "read_csv", "write_csv", "write_summary"]
