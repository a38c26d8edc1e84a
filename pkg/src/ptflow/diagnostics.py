"""Post-processing diagnostics: vehicle trajectories, grid self-convergence,
plateau detection, and front-speed measurement."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .model import ModelError
from .output import SpaceTimeRecord, Trajectory
from .scenarios import OutputPlan, Scenario, TrajectorySeeding

# A moving observer should not see the sampled speed change by more than this
# fraction between consecutive frames; violations only warn (shocks cross).
_TRAJ_SPEED_JUMP = 0.2


def _interp_speed(st: SpaceTimeRecord, frame: int, x: float) -> float:
    v = st.v[frame]
    xs = st.x
    if x <= xs[0]:
        return float(v[0])
    if x >= xs[-1]:
        return float(v[-1])
    i = int(np.searchsorted(xs, x)) - 1
    w = (x - xs[i]) / (xs[i + 1] - xs[i])
    return float((1.0 - w) * v[i] + w * v[i + 1])


def _speed_at(st: SpaceTimeRecord, t: float, x: float, frame_hint: int) -> float:
    times = st.times
    k = frame_hint
    while k + 1 < len(times) and times[k + 1] <= t:
        k += 1
    if k + 1 >= len(times):
        return _interp_speed(st, len(times) - 1, x)
    t0, t1 = times[k], times[k + 1]
    w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
    return (1.0 - w) * _interp_speed(st, k, x) + w * _interp_speed(st, k + 1, x)


def integrate_trajectories(st: SpaceTimeRecord, seeding: TrajectorySeeding,
                           x_left: float, x_right: float) -> list[Trajectory]:
    """Trajectories of observers moving with the local traffic speed.

    Observers start on a uniform spatial comb at the initial time and are
    additionally released from the upstream boundary at a fixed interval.
    Integration is the explicit midpoint rule over the recorded frames, with
    speed interpolated linearly in x and t.  A trajectory ends at the
    downstream boundary or the final frame.
    """
    if not st.times:
        raise ModelError("space-time record is empty")
    t0, t_end = st.times[0], st.times[-1]
    starts: list[tuple[float, float]] = []
    x0 = x_left
    while x0 <= x_right + 1e-9:
        starts.append((t0, min(x0, x_right)))
        x0 += seeding.seed_spacing_m
    t_rel = t0 + seeding.release_interval_s
    while t_rel < t_end:
        starts.append((t_rel, x_left))
        t_rel += seeding.release_interval_s

    times = np.asarray(st.times)
    jumps = 0
    trajectories = []
    for traj_id, (ts, xs) in enumerate(starts):
        t_pts = [ts]
        x_pts = [xs]
        k = int(np.searchsorted(times, ts, side="right") - 1)
        t, x = ts, xs
        v_prev = None
        while t < t_end and x < x_right:
            t_next = times[k + 1] if k + 1 < times.size else t_end
            if t_next <= t:
                k += 1
                continue
            h = t_next - t
            v1 = _speed_at(st, t, x, k)
            x_mid = x + 0.5 * h * v1
            v2 = _speed_at(st, t + 0.5 * h, x_mid, k)
            if v_prev is not None:
                scale = max(abs(v_prev), abs(v1), 1e-12)
                if abs(v1 - v_prev) > _TRAJ_SPEED_JUMP * scale:
                    jumps += 1
            v_prev = v1
            x_new = x + h * v2
            if x_new >= x_right:
                frac = 1.0 if x_new == x else (x_right - x) / (x_new - x)
                t = t + frac * h
                x = x_right
            else:
                t, x = t_next, x_new
                k += 1
            t_pts.append(t)
            x_pts.append(x)
        trajectories.append(Trajectory(traj_id, np.asarray(t_pts),
                                       np.asarray(x_pts)))
    if jumps:
        warnings.warn(
            f"{jumps} trajectory step(s) saw the sampled speed change by more "
            f"than {_TRAJ_SPEED_JUMP:.0%} between frames; consider a finer "
            f"space-time stride", stacklevel=2)
    return trajectories


# -- grid convergence ------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    dx: float
    l1_rho: float
    eoc: float | None


def _final_rho(scenario: Scenario, n_cells: int, workers: int) -> np.ndarray:
    from .stepper import run
    sc = replace(scenario,
                 grid=replace(scenario.grid, n_cells=n_cells),
                 output=OutputPlan(snapshots=(), spacetime_stride=0,
                                   trajectories=None))
    return run(sc, workers=workers).final_rho


def convergence_table(scenario: Scenario, dx_list: list[float],
                      reference_dx: float,
                      workers: int = 1) -> list[ConvergenceRow]:
    """L1(rho) distances to a fine-grid reference at the final time.

    The reference spacing must divide every coarse spacing so that fine cell
    averages aggregate exactly onto coarse cells.  The experimental order of
    convergence is reported between consecutive entries of dx_list.
    """
    span = scenario.grid.x_right - scenario.grid.x_left
    cells_ref = span / reference_dx
    if abs(cells_ref - round(cells_ref)) > 1e-9:
        raise ModelError(f"reference dx {reference_dx!r} does not tile the domain")
    ref = _final_rho(scenario, round(cells_ref), workers)

    rows: list[ConvergenceRow] = []
    for dx in dx_list:
        ratio = dx / reference_dx
        n = span / dx
        if (abs(ratio - round(ratio)) > 1e-9 or abs(n - round(n)) > 1e-9
                or round(ratio) < 1):
            raise ModelError(f"dx {dx!r} does not nest with the reference grid")
        coarse = _final_rho(scenario, round(n), workers)
        agg = ref.reshape(round(n), round(ratio)).mean(axis=1)
        l1 = float(np.sum(np.abs(coarse - agg)) * dx)
        eoc = None
        if rows:
            prev = rows[-1]
            if l1 > 0.0 and prev.l1_rho > 0.0:
                eoc = math.log(prev.l1_rho / l1) / math.log(prev.dx / dx)
        rows.append(ConvergenceRow(dx, l1, eoc))
    return rows


# -- plateau detection --------------------------------------------------------------

@dataclass(frozen=True)
class Plateau:
    value: float      # mean density over the plateau
    x_start: float    # center of the first cell
    x_end: float      # center of the last cell
    n_cells: int

    @property
    def extent(self) -> float:
        return self.x_end - self.x_start


MIN_PLATEAU_CELLS = 5
DEFAULT_PLATEAU_TOL = 0.002


def plateau_report(x: np.ndarray, rho: np.ndarray,
                   tol_rho: float = DEFAULT_PLATEAU_TOL) -> list[Plateau]:
    """Maximal runs of near-constant density, left to right.

    Cells join the current run while they stay within tol_rho of its running
    mean; runs shorter than MIN_PLATEAU_CELLS are discarded.
    """
    if tol_rho <= 0.0:
        raise ModelError("tol_rho must be positive")
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    plateaus: list[Plateau] = []
    start = 0
    total = 0.0
    count = 0

    def close(end: int) -> None:
        if count >= MIN_PLATEAU_CELLS:
            plateaus.append(Plateau(total / count, float(x[start]),
                                    float(x[end - 1]), count))

    for i in range(rho.size):
        if count and abs(rho[i] - total / count) > tol_rho:
            close(i)
            start, total, count = i, 0.0, 0
        total += rho[i]
        count += 1
    close(rho.size)
    return plateaus


# -- front speed ----------------------------------------------------------------------

def front_speed(st: SpaceTimeRecord, threshold_rho: float,
                t_window: tuple[float, float],
                x_window: tuple[float, float] | None = None) -> float:
    """Propagation speed of a density front.

    In every frame of the time window the single crossing of threshold_rho
    inside the x window is located by linear interpolation; the least-squares
    slope of the crossing position over time is the front speed.
    """
    if x_window is None:
        x_window = (float(st.x[0]), float(st.x[-1]))
    sel = [k for k, t in enumerate(st.times)
           if t_window[0] <= t <= t_window[1]]
    if len(sel) < 2:
        raise ModelError("time window contains fewer than 2 frames")
    imin = int(np.searchsorted(st.x, x_window[0], side="left"))
    imax = int(np.searchsorted(st.x, x_window[1], side="right"))
    if imax - imin < 2:
        raise ModelError("x window contains fewer than 2 cells")

    ts, xs = [], []
    for k in sel:
        rho = st.rho[k][imin:imax]
        x = st.x[imin:imax]
        d = rho - threshold_rho
        raw = np.flatnonzero(d[:-1] * d[1:] <= 0.0)
        # Cells sitting exactly on the threshold flag two adjacent products;
        # merge runs of consecutive indices into one crossing.
        crossings = [int(c) for j, c in enumerate(raw)
                     if j == 0 or c > raw[j - 1] + 1]
        if not crossings:
            raise ModelError(f"no threshold crossing at t={st.times[k]!r}")
        if len(crossings) > 1:
            raise ModelError(
                f"multiple threshold crossings at t={st.times[k]!r}; "
                f"narrow the x window")
        i = crossings[0]
        den = d[i] - d[i + 1]
        frac = 0.5 if den == 0.0 else d[i] / den
        ts.append(st.times[k])
        xs.append(x[i] + frac * (x[i + 1] - x[i]))
    slope, _ = np.polyfit(np.asarray(ts), np.asarray(xs), 1)
    return float(slope)
