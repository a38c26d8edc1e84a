"""Method-of-lines time integration of the semi-discrete scheme.

Cell averages evolve through flux differences assembled from the
reconstruction and the central-upwind flux; time stepping is the three-stage
third-order strong-stability-preserving Runge-Kutta method under CFL control.
Every stage is followed by projection onto the admissible set (which touches
q only, so vehicle mass is conserved exactly up to the boundary fluxes).

Boundaries are realized through two ghost cells per side: open ("free")
boundaries copy the edge cell, Dirichlet boundaries hold a prescribed,
possibly time-dependent state.
"""

from __future__ import annotations

import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import CellField, ExtendedField, N_GHOST
from .kernels import pipeline_range
from .model import ModelError, ModelParams, Phase, State, membership_values
from .output import ConservationLedger, RunOutput, Snapshot, SpaceTimeRecord
from .projection import project, project_field
from .reconstruction import detect_interfaces, extend_tags, tag_domains
from .scenarios import BoundarySpec, FreeBoundary, Scenario, boundary_state, \
    build_initial_field

# Weights with which the three stage fluxes enter the total step update.
_STAGE_WEIGHTS = (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)


class NumericsError(RuntimeError):
    """The integration produced an invalid state (NaN/Inf or inadmissible)."""


@dataclass(frozen=True)
class BoundaryCondition:
    """Either an open boundary or a time-parameterized Dirichlet state."""

    kind: str  # "free" | "dirichlet"
    generator: Callable[[float], State] | None = None

    @staticmethod
    def free() -> "BoundaryCondition":
        return BoundaryCondition("free")

    @staticmethod
    def dirichlet(generator: Callable[[float], State]) -> "BoundaryCondition":
        return BoundaryCondition("dirichlet", generator)


def boundary_condition_from_spec(spec: BoundarySpec,
                                 p: ModelParams) -> BoundaryCondition:
    if isinstance(spec, FreeBoundary):
        return BoundaryCondition.free()
    return BoundaryCondition.dirichlet(lambda t: boundary_state(spec, t, p))


def ghost_fill(field: CellField, bc_left: BoundaryCondition,
               bc_right: BoundaryCondition, t: float,
               p: ModelParams) -> ExtendedField:
    """Pad a field with two ghost cells per side realizing the boundaries."""
    n = field.grid.n_cells
    rho = np.empty(n + 2 * N_GHOST)
    q = np.empty(n + 2 * N_GHOST)
    phase = np.empty(n + 2 * N_GHOST, dtype=np.int8)
    rho[N_GHOST:N_GHOST + n] = field.rho
    q[N_GHOST:N_GHOST + n] = field.q
    phase[N_GHOST:N_GHOST + n] = field.phase
    for side, bc in (("left", bc_left), ("right", bc_right)):
        sl = slice(0, N_GHOST) if side == "left" else slice(n + N_GHOST, None)
        edge = N_GHOST if side == "left" else N_GHOST + n - 1
        if bc.kind == "free":
            rho[sl], q[sl], phase[sl] = rho[edge], q[edge], phase[edge]
        else:
            try:
                s = project(bc.generator(t), p)
            except Exception as e:
                raise NumericsError(
                    f"boundary evaluation failed at t={t!r} ({side}): {e}") from e
            rho[sl], q[sl] = s.rho, s.q
            phase[sl] = membership_values(s.rho, s.q, p)
    return ExtendedField(field.grid, rho, q, phase)


def _split_ranges(lo: int, hi: int, workers: int) -> list[tuple[int, int]]:
    n = hi - lo
    k = max(1, min(workers, n))
    bounds = [lo + (n * i) // k for i in range(k + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(k)]


def _interface_fluxes(ext: ExtendedField, tags_ext: np.ndarray, p: ModelParams,
                      workers: int = 1):
    """CU fluxes at the n+1 faces of the physical grid, plus the largest
    one-sided speed.  Results are independent of the worker count: every
    interface runs the same scalar pipeline and ranges write disjoint slices."""
    n = ext.grid.n_cells
    lo0 = N_GHOST - 1
    m = n + 1
    outputs = (np.empty(m), np.empty(m), np.empty(m), np.empty(m),
               np.empty(m), np.empty(m), np.empty(m, dtype=np.int8),
               np.empty(m, dtype=np.int8))

    def work(rng: tuple[int, int]):
        return pipeline_range(ext.rho, ext.q, ext.phase, tags_ext, p,
                              rng[0], rng[1], lo0, outputs)

    ranges = _split_ranges(lo0, lo0 + m, workers)
    if len(ranges) == 1:
        results = [work(ranges[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            results = list(pool.map(work, ranges))
    for _, err in results:
        if err >= 0:
            raise ModelError(f"reconstructed density at interface {err} is "
                             f"outside [0, rho_max]")
    amax = max(r[0] for r in results)
    return outputs[0], outputs[1], amax


def _tags_for(field: CellField, p: ModelParams) -> np.ndarray:
    tags = tag_domains(field.rho, detect_interfaces(field.rho, p), p)
    field.domain = tags
    return extend_tags(tags)


def _stage_eval(field: CellField, bc_left: BoundaryCondition,
                bc_right: BoundaryCondition, p: ModelParams, t: float,
                workers: int):
    ext = ghost_fill(field, bc_left, bc_right, t, p)
    return _interface_fluxes(ext, _tags_for(field, p), p, workers)


def rhs(ext: ExtendedField, p: ModelParams,
        workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative of the cell averages for a ghost-filled field."""
    field = CellField(ext.grid, ext.rho[N_GHOST:-N_GHOST],
                      ext.q[N_GHOST:-N_GHOST], ext.phase[N_GHOST:-N_GHOST])
    f_rho, f_q, _ = _interface_fluxes(ext, _tags_for(field, p), p, workers)
    dx = ext.grid.dx
    return -np.diff(f_rho) / dx, -np.diff(f_q) / dx


def cfl_dt(ext: ExtendedField, p: ModelParams, nu: float,
           workers: int = 1) -> float:
    """CFL time step nu * dx / (largest one-sided speed); infinite when all
    speeds vanish (the run loop then steps to the next output event)."""
    if not 0.0 < nu < 1.0:
        raise ModelError(f"CFL number must lie in (0, 1), got {nu!r}")
    field = CellField(ext.grid, ext.rho[N_GHOST:-N_GHOST],
                      ext.q[N_GHOST:-N_GHOST], ext.phase[N_GHOST:-N_GHOST])
    _, _, amax = _interface_fluxes(ext, _tags_for(field, p), p, workers)
    if amax <= 0.0:
        return math.inf
    return nu * ext.grid.dx / amax


def _check_finite(rho: np.ndarray, q: np.ndarray, t: float) -> None:
    bad = ~(np.isfinite(rho) & np.isfinite(q))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NumericsError(f"non-finite state in cell {i} at t={t!r}")


def ssp_rk3_step(field: CellField, bc_left: BoundaryCondition,
                 bc_right: BoundaryCondition, p: ModelParams, dt: float,
                 workers: int = 1, stage_callback=None, _stage1=None):
    """Advance one SSP-RK3 step of size dt.

    Returns (new field, flux_in, flux_out) where the flux pair is the
    stage-weighted boundary mass flux, i.e. the exact amount by which the
    step changes the total vehicle mass per unit time.
    """
    dx = field.grid.dx
    t = field.time
    stage_times = (t, t + dt, t + 0.5 * dt)
    flux_in = 0.0
    flux_out = 0.0

    def euler(f: CellField, stage: int, pre=None) -> CellField:
        nonlocal flux_in, flux_out
        f_rho, f_q, _ = pre if pre is not None else _stage_eval(
            f, bc_left, bc_right, p, stage_times[stage], workers)
        flux_in += _STAGE_WEIGHTS[stage] * f_rho[0]
        flux_out += _STAGE_WEIGHTS[stage] * f_rho[-1]
        rho = f.rho - (dt / dx) * np.diff(f_rho)
        q = f.q - (dt / dx) * np.diff(f_q)
        return CellField(f.grid, rho, q, f.phase, f.time)

    def finish(f: CellField, stage: int, new_time: float) -> CellField:
        _check_finite(f.rho, f.q, new_time)
        try:
            out = project_field(f, p)
        except ModelError as e:
            raise NumericsError(f"stage {stage} at t={new_time!r}: {e}") from e
        out.time = new_time
        if stage_callback is not None:
            stage_callback(stage, new_time, out)
        return out

    u1 = finish(euler(field, 0, _stage1), 1, t + dt)
    u2 = euler(u1, 1)
    u2.rho = 0.75 * field.rho + 0.25 * u2.rho
    u2.q = 0.75 * field.q + 0.25 * u2.q
    u2 = finish(u2, 2, t + 0.5 * dt)
    u3 = euler(u2, 2)
    u3.rho = field.rho / 3.0 + (2.0 / 3.0) * u3.rho
    u3.q = field.q / 3.0 + (2.0 / 3.0) * u3.q
    u3 = finish(u3, 3, t + dt)
    return u3, flux_in, flux_out


def _auto_stride(sc: Scenario) -> int:
    if sc.grid.n_cells <= 500:
        return 1
    est_steps = math.ceil(sc.t_final * sc.params.v_max / (sc.cfl * sc.grid.dx))
    return max(1, math.ceil(est_steps / 2000))


def _speeds(rho, q, phase, p: ModelParams) -> np.ndarray:
    v = np.full(rho.shape, p.v_max)
    cong = phase == Phase.CONGESTED
    if np.any(cong):
        v[cong] = (1.0 - rho[cong] / p.rho_max) * q[cong] / np.maximum(
            rho[cong], 1e-300)
    return v


def run(scenario: Scenario, workers: int = 1, stage_callback=None,
        max_steps: int = 5_000_000) -> RunOutput:
    """Integrate a scenario to its final time.

    Snapshot times are hit exactly by shrinking the CFL step (never by
    extrapolation).  The conservation ledger gets one row per step; its
    identity  mass(t+dt) - mass(t) + dt*(flux_out - flux_in) = 0  holds to
    round-off because projection never alters rho.
    """
    start = _time.perf_counter()
    p = scenario.params
    dx = scenario.grid.dx
    bc_left = boundary_condition_from_spec(scenario.bc_left, p)
    bc_right = boundary_condition_from_spec(scenario.bc_right, p)
    field = project_field(build_initial_field(scenario), p)

    snap_times = sorted(set(scenario.output.snapshots))
    events = sorted({*snap_times, scenario.t_final})
    if scenario.output.spacetime_stride == 0:
        stride = None
    elif scenario.output.spacetime_stride is None:
        stride = _auto_stride(scenario)
    else:
        stride = scenario.output.spacetime_stride

    x = scenario.grid.centers()
    snapshots: list[Snapshot] = []
    spacetime = SpaceTimeRecord(x=x) if stride is not None else None
    ledger = ConservationLedger()

    def emit_snapshot(f: CellField) -> None:
        v = _speeds(f.rho, f.q, f.phase, p)
        snapshots.append(Snapshot(f.time, x.copy(), f.rho.copy(), f.q.copy(),
                                  v, f.phase.copy()))

    def record_frame(f: CellField) -> None:
        spacetime.append(f.time, f.rho.copy(), f.q.copy(),
                         _speeds(f.rho, f.q, f.phase, p))

    mass = float(np.sum(field.rho)) * dx
    ledger.append(0.0, 0.0, mass, 0.0, 0.0)
    if snap_times and snap_times[0] == 0.0:
        emit_snapshot(field)
    if spacetime is not None:
        record_frame(field)

    events = [e for e in events if e > 0.0]
    n_steps = 0
    while events:
        target = events[0]
        stage1 = _stage_eval(field, bc_left, bc_right, p, field.time, workers)
        amax = stage1[2]
        dt_cfl = (scenario.cfl * dx / amax) if amax > 0.0 else math.inf
        gap = target - field.time
        landed = dt_cfl >= gap
        dt = gap if landed else dt_cfl
        field, flux_in, flux_out = ssp_rk3_step(
            field, bc_left, bc_right, p, dt, workers, stage_callback, stage1)
        if landed:
            field.time = target
            events.pop(0)
        n_steps += 1
        mass = float(np.sum(field.rho)) * dx
        ledger.append(field.time, dt, mass, flux_in, flux_out)
        if spacetime is not None and (n_steps % stride == 0 or not events):
            record_frame(field)
        if landed and target in snap_times:
            emit_snapshot(field)
        if n_steps > max_steps:
            raise NumericsError(f"exceeded {max_steps} steps at t={field.time!r}")

    trajectories = None
    if scenario.output.trajectories is not None and spacetime is not None:
        from .diagnostics import integrate_trajectories
        trajectories = integrate_trajectories(
            spacetime, scenario.output.trajectories,
            scenario.grid.x_left, scenario.grid.x_right)

    meta = {
        "n_steps": n_steps,
        "n_cells": scenario.grid.n_cells,
        "dx": dx,
        "cfl": scenario.cfl,
        "t_final": scenario.t_final,
        "workers": workers,
        "wall_time_s": _time.perf_counter() - start,
    }
    return RunOutput(snapshots=snapshots, spacetime=spacetime,
                     trajectories=trajectories, ledger=ledger,
                     final_rho=field.rho.copy(), final_q=field.q.copy(),
                     final_phase=field.phase.copy(), meta=meta)
