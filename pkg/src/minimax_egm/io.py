"""CSV/JSON writers with full double precision."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TRAJECTORY_HEADER_PREFIX = ["iter", "residual", "ratio"]


class OutputExists(FileExistsError):
    pass


def fmt(value) -> str:
    """Format one CSV cell; floats get 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def ensure_writable(paths: Iterable[Path], force: bool) -> None:
    if force:
        return
    existing = [str(p) for p in paths if Path(p).exists()]
    if existing:
        raise OutputExists(f"refusing to overwrite {', '.join(existing)} (use --force)")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no inf/nan; encode them as strings.
        if math.isnan(v) or math.isinf(v):
            return fmt(v)
        return v
    return obj


def write_json(path: Path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=False)
        fh.write("\n")


def trajectory_header(n: int, m: int) -> list[str]:
    return TRAJECTORY_HEADER_PREFIX + [f"x{i}" for i in range(n)] + [f"y{j}" for j in range(m)]


def write_trajectory_csv(path: Path, result) -> None:
    """One row per logged sample: ``iter,residual,ratio,x0..,y0..``."""
    p = result.final_point
    header = trajectory_header(p.x.size, p.y.size)
    rows = (
        [t.iter, t.residual, t.ratio, *t.point.x.tolist(), *t.point.y.tolist()]
        for t in result.trajectory
    )
    write_csv(path, header, rows)
