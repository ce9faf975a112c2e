"""Reading and writing design files.

JSON files hold ``space``, ``alpha``, ``beta``, ``d``, ``degree``,
``points``, ``tolerance`` and ``residual_sup`` plus a ``created`` timestamp;
fields that do not apply to the space are ``null``.  CSV files hold one
point per row and nothing else.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
from pathlib import Path

import numpy as np

from .core import DesignProblem
from .errors import ArgumentError

__all__ = ["design_record", "write_design", "read_design", "write_points_csv", "read_points_csv",
           "write_graph", "TIMESTAMP_FIELD"]

TIMESTAMP_FIELD = "created"


def design_record(problem: DesignProblem, points, tolerance: float, residual_sup: float,
                  timestamp: str | None = None) -> dict:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    interval = problem.space == "interval"
    record = {
        "space": problem.space,
        "alpha": problem.alpha if interval else None,
        "beta": problem.beta if interval else None,
        "d": None if interval else problem.d,
        "degree": problem.degree,
        "points": pts.tolist(),
        "tolerance": float(tolerance),
        "residual_sup": float(residual_sup),
    }
    record[TIMESTAMP_FIELD] = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return record


def write_design(path, record: dict, fmt: str = "json") -> None:
    """Write a design record as JSON, or its points alone as CSV."""
    if fmt == "json":
        Path(path).write_text(json.dumps(record, indent=2) + "\n")
    elif fmt == "csv":
        write_points_csv(path, record["points"])
    else:
        raise ArgumentError(f"unknown format {fmt!r}")


def write_points_csv(path, points) -> None:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in pts:
            writer.writerow([repr(float(v)) for v in row])


def read_points_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ArgumentError(f"{path}: expected a non-empty table with equal-length rows")
    return np.array(rows)


def read_design(path) -> dict:
    """Load a JSON design file or a CSV point table into a record dict.

    Missing fields come back as ``None``; a CSV file yields only ``points``.
    """
    path = Path(path)
    if not path.exists():
        raise ArgumentError(f"{path}: no such file")
    if path.suffix.lower() == ".csv":
        pts = read_points_csv(path)
        record = {}
    else:
        try:
            record = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(record, dict) or "points" not in record:
            raise ArgumentError(f"{path}: design file needs a 'points' field")
        try:
            pts = np.array(record["points"], dtype=float)
        except (TypeError, ValueError):
            raise ArgumentError(f"{path}: 'points' must be a list of coordinate lists") from None
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ArgumentError(f"{path}: 'points' must be a non-empty list of coordinate lists")
    out = {k: record.get(k) for k in ("space", "alpha", "beta", "d", "degree", "tolerance", "residual_sup")}
    out["points"] = pts
    return out


def write_graph(path, graph) -> None:
    """Dump a sphere graph as a JSON list of edges."""
    Path(path).write_text(json.dumps(graph.to_json(), indent=1) + "\n")
