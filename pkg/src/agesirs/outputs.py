"""CSV and JSON writers. Floats use their shortest round-trip decimal form."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from agesirs.integrator import Trajectory
from agesirs.model import STATE_NAMES


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_trajectory(
    path: Path,
    states: Trajectory,
    costates: Trajectory | None = None,
    controls: tuple[np.ndarray, np.ndarray] | None = None,
) -> Path:
    """``t,S1,I1,R1,S2,I2,R2`` plus ``lam1..lam6`` and ``u11,u12`` when given."""
    header = ["t", *STATE_NAMES]
    columns = [states.times[:, None], states.samples]
    if costates is not None:
        header += [f"lam{i}" for i in range(1, 7)]
        columns.append(costates.samples)
    if controls is not None:
        header += ["u11", "u12"]
        columns.append(np.column_stack(controls))
    table = np.hstack(columns)
    return write_csv(path, header, table.tolist())


def write_series(path: Path, x_name: str, y_name: str, x: Sequence[float], y: Sequence[float]) -> Path:
    return write_csv(path, [x_name, y_name], zip(x, y))


def thin(n_nodes: int, max_rows: int) -> np.ndarray:
    """Evenly strided node indices (always keeping the last node) capped near ``max_rows``."""
    stride = max(1, math.ceil((n_nodes - 1) / max(1, max_rows - 1)))
    idx = np.arange(0, n_nodes, stride)
    if idx[-1] != n_nodes - 1:
        idx = np.append(idx, n_nodes - 1)
    return idx


def write_sweep_curves(path: Path, result, max_rows: int = 1001) -> Path:
    """Per-sweep table ``t,<value columns>,mean,mse`` on a thinned time axis."""
    idx = thin(len(result.times), max_rows)
    header = ["t", *(f"{result.param_name}={fmt(v)}" for v in result.values), "mean", "mse"]
    table = np.column_stack(
        [result.times[idx], result.curves[:, idx].T, result.mean_curve[idx], result.mse_curve[idx]]
    )
    return write_csv(path, header, table.tolist())


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(payload), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path
