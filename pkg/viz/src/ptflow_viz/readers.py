"""Readers for the solver's CSV run products.

Only the documented file schemas are consumed here; the solver package is
never imported.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

SNAPSHOT_HEADER = ["x", "rho", "q", "v", "phase"]
SPACETIME_HEADER = ["t", "x", "rho", "q", "v"]
TRAJECTORY_HEADER = ["id", "t", "x"]
CONVERGENCE_HEADER = ["dx", "l1_rho", "eoc"]


class SchemaError(ValueError):
    """A run file is missing or its columns do not match the schema."""


def _rows(path: Path, header: list[str]) -> list[list[str]]:
    if not path.is_file():
        raise SchemaError(f"missing file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if first != header:
            raise SchemaError(f"{path}: expected columns {header}, "
                              f"found {first}")
        return [row for row in reader if row]


def snapshot_times(run_dir) -> list[float]:
    return sorted(float(p.stem.split("_", 1)[1])
                  for p in Path(run_dir).glob("snapshot_*.csv"))


def read_snapshot(run_dir, t: float) -> dict:
    path = Path(run_dir) / f"snapshot_{t:g}.csv"
    rows = _rows(path, SNAPSHOT_HEADER)
    cols = list(zip(*rows))
    return {
        "t": t,
        "x": np.array(cols[0], dtype=float),
        "rho": np.array(cols[1], dtype=float),
        "q": np.array(cols[2], dtype=float),
        "v": np.array(cols[3], dtype=float),
        "phase": np.array(cols[4]),
    }


def read_spacetime(run_dir) -> dict:
    rows = _rows(Path(run_dir) / "spacetime.csv", SPACETIME_HEADER)
    t = np.array([r[0] for r in rows], dtype=float)
    x = np.array([r[1] for r in rows], dtype=float)
    times = np.unique(t)
    xs = np.unique(x)
    n_t, n_x = times.size, xs.size
    if n_t * n_x != t.size:
        raise SchemaError("spacetime.csv is not a complete t-x grid")
    shape = (n_t, n_x)
    return {
        "t": times,
        "x": xs,
        "rho": np.array([r[2] for r in rows], dtype=float).reshape(shape),
        "q": np.array([r[3] for r in rows], dtype=float).reshape(shape),
        "v": np.array([r[4] for r in rows], dtype=float).reshape(shape),
    }


def read_trajectories(run_dir) -> list[dict]:
    rows = _rows(Path(run_dir) / "trajectories.csv", TRAJECTORY_HEADER)
    out: dict[str, dict] = {}
    for tid, t, x in rows:
        rec = out.setdefault(tid, {"id": tid, "t": [], "x": []})
        rec["t"].append(float(t))
        rec["x"].append(float(x))
    return [{"id": rec["id"], "t": np.array(rec["t"]), "x": np.array(rec["x"])}
            for rec in out.values()]


def read_convergence(run_dir) -> list[dict]:
    rows = _rows(Path(run_dir) / "convergence.csv", CONVERGENCE_HEADER)
    return [{"dx": float(r[0]), "l1_rho": float(r[1]),
             "eoc": float(r[2]) if r[2] else None} for r in rows]
