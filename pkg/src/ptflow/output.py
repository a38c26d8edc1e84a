"""Run products: snapshots, space-time frames, trajectories, the conservation
ledger, and their CSV serialization.

CSV cells hold the shortest decimal that round-trips the underlying binary
value, so outputs are byte-stable and fit for exact regression comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import ModelError, Phase

SNAPSHOT_COLUMNS = ("x", "rho", "q", "v", "phase")
SPACETIME_COLUMNS = ("t", "x", "rho", "q", "v")
TRAJECTORY_COLUMNS = ("id", "t", "x")
LEDGER_COLUMNS = ("t", "dt", "mass", "flux_in", "flux_out")

_PHASE_NAMES = {int(Phase.FREE): "free", int(Phase.CONGESTED): "congested"}
_PHASE_VALUES = {v: k for k, v in _PHASE_NAMES.items()}


@dataclass
class Snapshot:
    t: float
    x: np.ndarray
    rho: np.ndarray
    q: np.ndarray
    v: np.ndarray
    phase: np.ndarray


@dataclass
class SpaceTimeRecord:
    """Strided frames of the full solution, stacked row-per-frame."""

    x: np.ndarray
    times: list[float] = field(default_factory=list)
    rho: list[np.ndarray] = field(default_factory=list)
    q: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def append(self, t, rho, q, v) -> None:
        self.times.append(float(t))
        self.rho.append(np.asarray(rho))
        self.q.append(np.asarray(q))
        self.v.append(np.asarray(v))

    @property
    def n_frames(self) -> int:
        return len(self.times)


@dataclass
class Trajectory:
    traj_id: int
    t: np.ndarray
    x: np.ndarray


@dataclass
class ConservationLedger:
    """Per-step record: time after the step, step size, total vehicle mass,
    and the step-averaged boundary mass fluxes."""

    t: list[float] = field(default_factory=list)
    dt: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    flux_in: list[float] = field(default_factory=list)
    flux_out: list[float] = field(default_factory=list)

    def append(self, t, dt, mass, flux_in, flux_out) -> None:
        self.t.append(float(t))
        self.dt.append(float(dt))
        self.mass.append(float(mass))
        self.flux_in.append(float(flux_in))
        self.flux_out.append(float(flux_out))


@dataclass
class RunOutput:
    snapshots: list[Snapshot]
    spacetime: SpaceTimeRecord | None
    trajectories: list[Trajectory] | None
    ledger: ConservationLedger
    final_rho: np.ndarray
    final_q: np.ndarray
    final_phase: np.ndarray
    meta: dict


# -- writing ---------------------------------------------------------------------

def _fmt(value: float) -> str:
    return repr(float(value))


def _snapshot_stem(t: float) -> str:
    return f"snapshot_{t:g}.csv"


def write_run_dir(out_dir, out: RunOutput) -> None:
    """Write all run products into a directory (created if missing)."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    for snap in out.snapshots:
        lines = [",".join(SNAPSHOT_COLUMNS)]
        for i in range(snap.x.size):
            lines.append(",".join((
                _fmt(snap.x[i]), _fmt(snap.rho[i]), _fmt(snap.q[i]),
                _fmt(snap.v[i]), _PHASE_NAMES[int(snap.phase[i])])))
        (d / _snapshot_stem(snap.t)).write_text("\n".join(lines) + "\n")

    if out.spacetime is not None:
        st = out.spacetime
        lines = [",".join(SPACETIME_COLUMNS)]
        for k, t in enumerate(st.times):
            ts = _fmt(t)
            for i in range(st.x.size):
                lines.append(",".join((ts, _fmt(st.x[i]), _fmt(st.rho[k][i]),
                                       _fmt(st.q[k][i]), _fmt(st.v[k][i]))))
        (d / "spacetime.csv").write_text("\n".join(lines) + "\n")

    if out.trajectories is not None:
        lines = [",".join(TRAJECTORY_COLUMNS)]
        for traj in out.trajectories:
            sid = str(traj.traj_id)
            for t, x in zip(traj.t, traj.x):
                lines.append(",".join((sid, _fmt(t), _fmt(x))))
        (d / "trajectories.csv").write_text("\n".join(lines) + "\n")

    led = out.ledger
    lines = [",".join(LEDGER_COLUMNS)]
    for i in range(len(led.t)):
        lines.append(",".join((_fmt(led.t[i]), _fmt(led.dt[i]), _fmt(led.mass[i]),
                               _fmt(led.flux_in[i]), _fmt(led.flux_out[i]))))
    (d / "ledger.csv").write_text("\n".join(lines) + "\n")

    (d / "meta.json").write_text(json.dumps(out.meta, indent=2, sort_keys=True)
                                 + "\n")


# -- reading ----------------------------------------------------------------------

def _read_csv(path: Path, expected_header: tuple[str, ...]) -> list[list[str]]:
    if not path.is_file():
        raise ModelError(f"missing run file: {path}")
    lines = path.read_text().splitlines()
    if not lines or tuple(lines[0].split(",")) != expected_header:
        raise ModelError(f"{path}: expected header {','.join(expected_header)}")
    return [line.split(",") for line in lines[1:] if line]


def snapshot_times(run_dir) -> list[float]:
    """Snapshot times available in a run directory, ascending."""
    stems = sorted(Path(run_dir).glob("snapshot_*.csv"))
    return sorted(float(s.stem.split("_", 1)[1]) for s in stems)


def load_snapshot(run_dir, t: float) -> Snapshot:
    rows = _read_csv(Path(run_dir) / _snapshot_stem(t), SNAPSHOT_COLUMNS)
    cols = list(zip(*rows))
    return Snapshot(
        t=float(t),
        x=np.array([float(v) for v in cols[0]]),
        rho=np.array([float(v) for v in cols[1]]),
        q=np.array([float(v) for v in cols[2]]),
        v=np.array([float(v) for v in cols[3]]),
        phase=np.array([_PHASE_VALUES[v] for v in cols[4]], dtype=np.int8))


def load_spacetime(run_dir) -> SpaceTimeRecord:
    rows = _read_csv(Path(run_dir) / "spacetime.csv", SPACETIME_COLUMNS)
    t = np.array([float(r[0]) for r in rows])
    frame_times = np.unique(t)
    x = np.array([float(r[1]) for r in rows if float(r[0]) == frame_times[0]])
    st = SpaceTimeRecord(x=x)
    n = x.size
    for k, ft in enumerate(frame_times):
        block = rows[k * n:(k + 1) * n]
        st.append(ft, np.array([float(r[2]) for r in block]),
                  np.array([float(r[3]) for r in block]),
                  np.array([float(r[4]) for r in block]))
    return st


def load_ledger(run_dir) -> ConservationLedger:
    rows = _read_csv(Path(run_dir) / "ledger.csv", LEDGER_COLUMNS)
    led = ConservationLedger()
    for r in rows:
        led.append(*(float(v) for v in r))
    return led
