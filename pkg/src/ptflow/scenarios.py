"""Scenario definition, validation, (de)serialization, and the built-in catalog.

A scenario bundles model parameters, a grid, initial data, boundary
conditions, run controls, and an output plan.  Scenario files are JSON
documents; see ``parse_scenario`` for the schema.  The catalog exposes the
twelve standard Riemann tests plus three road scenarios with time-dependent
downstream boundary data, and two diagnostic configurations.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import CellField, Grid, field_from_arrays
from .model import (
    Membership,
    ModelParams,
    Phase,
    State,
    classify,
    membership_values,
    q_free,
    state_from_density_speed,
)
from .projection import project

SCHEMA_VERSION = 1

# Default exponent blend of the congested boundary flux closure.
BC_CLOSURE_A = 30.0 / 7.0


class ScenarioError(ValueError):
    """Scenario document violates the schema or an invariant."""


# -- initial conditions -----------------------------------------------------------

@dataclass(frozen=True)
class ICPiece:
    rho: float
    v: float
    phase: Phase


@dataclass(frozen=True)
class PiecewiseIC:
    """Piecewise-constant initial data given as (density, speed, phase)
    pieces separated at ascending breakpoints."""

    breakpoints: tuple[float, ...]
    pieces: tuple[ICPiece, ...]


@dataclass(frozen=True)
class GaussianFreeIC:
    """Smooth free-flow density bump: base + amp * exp(-((x-center)/width)^2).

    The peak must stay below the critical free density; q is slaved to the
    free-flow curve.
    """

    base_rho: float
    amp_rho: float
    center: float
    width: float


# -- boundary conditions ------------------------------------------------------------

@dataclass(frozen=True)
class FreeBoundary:
    """Open boundary: ghost cells copy the edge cell."""


@dataclass(frozen=True)
class DirichletConstant:
    """Fixed boundary density; q follows the boundary flux closure."""

    rho: float
    a: float = BC_CLOSURE_A


@dataclass(frozen=True)
class DirichletPulse:
    """Two-segment downstream profile built from sech^2 pulses.

    Until ``switch_time`` the density is
    base_early + amp_early*(sech^2((t - t0/2)/w) - sech^2((t - t1 - t0/2)/w)/4),
    afterwards the same shape with (base_late, amp_late) and centers t0, t1+t0.
    """

    w: float = 201.25
    t0: float = 1500.0
    t1: float = 3000.0
    switch_time: float = 1000.0 / 3.0
    base_early: float = 0.05
    amp_early: float = 0.3
    base_late: float = 0.03
    amp_late: float = 0.2
    a: float = BC_CLOSURE_A


@dataclass(frozen=True)
class DirichletStopAndGo:
    """Downstream stop-and-go profile: a sech^2 pulse train until
    ``pulse_end``, a constant ``base`` until ``steady_end``, then the free
    density ``rho_after``.

    ``periodic`` centers one pulse per 100 s window (100*floor(t/100) + 50);
    the non-periodic variant uses the center floor(t/100) + 50, which yields a
    single pulse near t = 50.
    """

    w: float = 10.25
    t1: float = 3000.0
    base: float = 0.03
    amp: float = 0.03
    dip: float = 2.05
    pulse_end: float = 1000.0
    steady_end: float = 1200.0
    rho_after: float = 0.01
    periodic: bool = True
    a: float = BC_CLOSURE_A


BoundarySpec = FreeBoundary | DirichletConstant | DirichletPulse | DirichletStopAndGo

_BC_KINDS = {
    FreeBoundary: "free",
    DirichletConstant: "dirichlet_constant",
    DirichletPulse: "dirichlet_pulse",
    DirichletStopAndGo: "dirichlet_stop_and_go",
}
_BC_TYPES = {v: k for k, v in _BC_KINDS.items()}


# -- output plan ---------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectorySeeding:
    seed_spacing_m: float
    release_interval_s: float


@dataclass(frozen=True)
class OutputPlan:
    """What a run records.  ``spacetime_stride``: None selects the automatic
    stride (every step for small grids), 0 disables space-time recording,
    n >= 1 records every n-th step."""

    snapshots: tuple[float, ...] = ()
    spacetime_stride: int | None = None
    trajectories: TrajectorySeeding | None = None


@dataclass(frozen=True)
class Scenario:
    params: ModelParams
    grid: Grid
    cfl: float
    t_final: float
    ic: PiecewiseIC | GaussianFreeIC
    bc_left: BoundarySpec
    bc_right: BoundarySpec
    output: OutputPlan = OutputPlan()


# -- boundary state evaluation ---------------------------------------------------------

def _sech2(z) -> float:
    # Overflow-safe 1/cosh^2.
    a = math.exp(-abs(z))
    s = 2.0 * a / (1.0 + a * a)
    return s * s


def bc_q_closure(rho_b: float, a: float, p: ModelParams) -> float:
    """q imposed at a Dirichlet boundary for a given boundary density.

    Free densities follow the free-flow curve; congested densities follow a
    smooth blend capped between the admissible q bounds."""
    if not 0.0 < rho_b < p.rho_max:
        raise ScenarioError(f"boundary density {rho_b!r} outside (0, rho_max)")
    if rho_b <= p.rho_crit_free:
        return float(q_free(rho_b, p))
    r = rho_b / p.rho_max
    blend = ((a * r) ** 20 + (1.0 - r) ** 20) ** (1.0 / 20.0)
    return 21.0 / 4.0 * p.rho_max * (1.0 + (a - 1.0) * r - blend)


def _bc_rho(spec: BoundarySpec, t: float) -> float:
    if isinstance(spec, DirichletConstant):
        return spec.rho
    if isinstance(spec, DirichletPulse):
        if t <= spec.switch_time:
            base, amp, c = spec.base_early, spec.amp_early, 0.5 * spec.t0
        else:
            base, amp, c = spec.base_late, spec.amp_late, spec.t0
        return base + amp * (_sech2((t - c) / spec.w)
                             - 0.25 * _sech2((t - spec.t1 - c) / spec.w))
    if isinstance(spec, DirichletStopAndGo):
        if t <= spec.pulse_end:
            c = (100.0 * math.floor(t / 100.0) + 50.0 if spec.periodic
                 else math.floor(t / 100.0) + 50.0)
            return spec.base + spec.amp * (_sech2((t - c) / spec.w)
                                           - spec.dip * _sech2((t - spec.t1 - c) / spec.w))
        if t < spec.steady_end:
            return spec.base
        return spec.rho_after
    raise ScenarioError(f"no boundary density for {type(spec).__name__}")


def boundary_state(spec: BoundarySpec, t: float, p: ModelParams) -> State:
    """Admissible boundary state of a Dirichlet family at time t."""
    if t < 0.0:
        raise ScenarioError("boundary state queried at negative time")
    rho = _bc_rho(spec, t)
    q = bc_q_closure(rho, spec.a, p)
    return project(State(rho, q), p)


# -- validation & field construction -----------------------------------------------------

def validate_scenario(sc: Scenario) -> Scenario:
    """Check every scenario invariant; returns the scenario unchanged."""
    return _validate(sc)


def _validate(sc: Scenario) -> Scenario:
    if not 0.0 < sc.cfl < 1.0:
        raise ScenarioError(f"cfl must lie in (0, 1), got {sc.cfl!r}")
    if sc.t_final < 0.0:
        raise ScenarioError("t_final must be non-negative")
    for t in sc.output.snapshots:
        if not 0.0 <= t <= sc.t_final:
            raise ScenarioError(f"snapshot time {t!r} outside [0, t_final]")
    if (sc.output.trajectories is not None
            and sc.output.spacetime_stride == 0):
        raise ScenarioError("trajectories need space-time recording enabled")

    if isinstance(sc.ic, PiecewiseIC):
        bps = sc.ic.breakpoints
        if len(sc.ic.pieces) != len(bps) + 1:
            raise ScenarioError("need exactly one more piece than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ScenarioError("breakpoints must be strictly ascending")
        if bps and not (sc.grid.x_left < bps[0] and bps[-1] < sc.grid.x_right):
            raise ScenarioError("breakpoints must lie inside the domain")
        for piece in sc.ic.pieces:
            s = state_from_density_speed(piece.rho, piece.v, piece.phase,
                                         sc.params)
            if classify(s, sc.params) == Membership.OUTSIDE:
                raise ScenarioError(
                    f"initial piece (rho={piece.rho!r}, v={piece.v!r}) is "
                    f"not admissible")
    else:
        peak = sc.ic.base_rho + sc.ic.amp_rho
        if not 0.0 < sc.ic.base_rho <= peak <= sc.params.rho_crit_free:
            raise ScenarioError("smooth bump must stay within free flow")

    for side, spec in (("left", sc.bc_left), ("right", sc.bc_right)):
        if isinstance(spec, FreeBoundary):
            continue
        ts = np.linspace(0.0, sc.t_final, 4001) if sc.t_final > 0 else [0.0]
        for t in ts:
            rho = _bc_rho(spec, float(t))
            if not 0.0 < rho < sc.params.rho_max:
                raise ScenarioError(
                    f"bc_{side} density {rho!r} at t={float(t)!r} outside "
                    f"(0, rho_max)")
    return sc


def build_initial_field(sc: Scenario) -> CellField:
    """Cell averages of the initial data (point values at cell centers)."""
    x = sc.grid.centers()
    if isinstance(sc.ic, PiecewiseIC):
        idx = np.searchsorted(np.asarray(sc.ic.breakpoints), x, side="left")
        states = [state_from_density_speed(pc.rho, pc.v, pc.phase, sc.params)
                  for pc in sc.ic.pieces]
        rho = np.array([states[i].rho for i in idx])
        q = np.array([states[i].q for i in idx])
    else:
        rho = sc.ic.base_rho + sc.ic.amp_rho * np.exp(
            -((x - sc.ic.center) / sc.ic.width) ** 2)
        q = np.asarray(q_free(rho, sc.params))
    return field_from_arrays(sc.grid, rho, q, sc.params)


# -- (de)serialization ---------------------------------------------------------------------

def _params_to_doc(p: ModelParams) -> dict:
    d = asdict(p)
    d.pop("rho_crit_cong")
    return d


def _ic_to_doc(ic) -> dict:
    if isinstance(ic, PiecewiseIC):
        return {"breakpoints": list(ic.breakpoints),
                "pieces": [{"rho": pc.rho, "v": pc.v,
                            "phase": "free" if pc.phase == Phase.FREE
                            else "congested"}
                           for pc in ic.pieces]}
    return {"kind": "gaussian_free", **asdict(ic)}


def _bc_to_doc(spec: BoundarySpec) -> dict:
    return {"kind": _BC_KINDS[type(spec)], **asdict(spec)}


def serialize_scenario(sc: Scenario) -> str:
    """Canonical JSON document for a scenario (full float precision)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "params": _params_to_doc(sc.params),
        "grid": {"x_left": sc.grid.x_left, "x_right": sc.grid.x_right,
                 "n_cells": sc.grid.n_cells},
        "cfl": sc.cfl,
        "t_final": sc.t_final,
        "ic": _ic_to_doc(sc.ic),
        "bc_left": _bc_to_doc(sc.bc_left),
        "bc_right": _bc_to_doc(sc.bc_right),
        "output": {
            "snapshots": list(sc.output.snapshots),
            "spacetime_stride": sc.output.spacetime_stride,
            "trajectories": (None if sc.output.trajectories is None
                             else asdict(sc.output.trajectories)),
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ScenarioError(f"{where}: missing required key {key!r}")
    return doc[key]


def _parse_ic(doc: dict):
    if doc.get("kind") == "gaussian_free":
        try:
            return GaussianFreeIC(base_rho=float(doc["base_rho"]),
                                  amp_rho=float(doc["amp_rho"]),
                                  center=float(doc["center"]),
                                  width=float(doc["width"]))
        except KeyError as e:
            raise ScenarioError(f"ic: missing key {e.args[0]!r}") from e
    pieces = []
    for raw in _require(doc, "pieces", "ic"):
        phase = raw.get("phase")
        if phase not in ("free", "congested"):
            raise ScenarioError(f"ic piece: bad phase {phase!r}")
        pieces.append(ICPiece(float(raw["rho"]), float(raw["v"]),
                              Phase.FREE if phase == "free" else Phase.CONGESTED))
    return PiecewiseIC(tuple(float(b) for b in doc.get("breakpoints", [])),
                       tuple(pieces))


def _parse_bc(doc: dict, side: str) -> BoundarySpec:
    kind = _require(doc, "kind", f"bc_{side}")
    cls = _BC_TYPES.get(kind)
    if cls is None:
        raise ScenarioError(f"bc_{side}: unknown kind {kind!r}")
    kwargs = {k: v for k, v in doc.items() if k != "kind"}
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ScenarioError(f"bc_{side}: {e}") from e


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario JSON document.

    Missing ``params`` fall back to the standard calibration; missing ``cfl``
    defaults to 0.4.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version!r}")

    try:
        params = ModelParams(**doc.get("params", {}))
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"params: {e}") from e
    gdoc = _require(doc, "grid", "scenario")
    try:
        grid = Grid(float(_require(gdoc, "x_left", "grid")),
                    float(_require(gdoc, "x_right", "grid")),
                    int(_require(gdoc, "n_cells", "grid")))
    except ValueError as e:
        raise ScenarioError(f"grid: {e}") from e

    odoc = doc.get("output", {})
    stride = odoc.get("spacetime_stride")
    traj_doc = odoc.get("trajectories")
    plan = OutputPlan(
        snapshots=tuple(float(t) for t in odoc.get("snapshots", [])),
        spacetime_stride=None if stride is None else int(stride),
        trajectories=(None if traj_doc is None else TrajectorySeeding(
            float(traj_doc["seed_spacing_m"]),
            float(traj_doc["release_interval_s"]))))

    sc = Scenario(
        params=params,
        grid=grid,
        cfl=float(doc.get("cfl", 0.4)),
        t_final=float(_require(doc, "t_final", "scenario")),
        ic=_parse_ic(_require(doc, "ic", "scenario")),
        bc_left=_parse_bc(_require(doc, "bc_left", "scenario"), "left"),
        bc_right=_parse_bc(_require(doc, "bc_right", "scenario"), "right"),
        output=plan)
    try:
        return _validate(sc)
    except ScenarioError:
        raise
    except ValueError as e:
        raise ScenarioError(str(e)) from e


# -- built-in catalog -----------------------------------------------------------------------

# (left phase, rho, v), (right phase, rho, v) for the twelve Riemann tests.
_RIEMANN_DATA = {
    1: ((Phase.FREE, 0.011, 30.0), (Phase.CONGESTED, 0.0825, 4.5113)),
    2: ((Phase.FREE, 0.011, 30.0), (Phase.CONGESTED, 0.0775, 4.5945)),
    3: ((Phase.FREE, 0.0075, 30.0), (Phase.CONGESTED, 0.0675, 5.338)),
    4: ((Phase.FREE, 0.001, 30.0), (Phase.CONGESTED, 0.0625, 4.73)),
    5: ((Phase.FREE, 0.001, 30.0), (Phase.CONGESTED, 0.0875, 2.9945)),
    6: ((Phase.CONGESTED, 0.128, 0.42321), (Phase.CONGESTED, 0.0375, 13.838)),
    7: ((Phase.CONGESTED, 0.0375, 13.838), (Phase.CONGESTED, 0.128, 0.42321)),
    8: ((Phase.CONGESTED, 0.0825, 4.5113), (Phase.FREE, 0.011, 30.0)),
    9: ((Phase.CONGESTED, 0.0775, 4.5945), (Phase.FREE, 0.011, 30.0)),
    10: ((Phase.CONGESTED, 0.0675, 5.338), (Phase.FREE, 0.0075, 30.0)),
    11: ((Phase.CONGESTED, 0.0625, 4.73), (Phase.FREE, 0.001, 30.0)),
    12: ((Phase.CONGESTED, 0.0875, 2.9945), (Phase.FREE, 0.001, 30.0)),
}

_TRAJ = TrajectorySeeding(seed_spacing_m=100.0, release_interval_s=50.0)


def _riemann_scenario(n: int) -> Scenario:
    (phl, rl, vl), (phr, rr, vr) = _RIEMANN_DATA[n]
    return Scenario(
        params=ModelParams(),
        grid=Grid(0.0, 80000.0, 400),
        cfl=0.4,
        t_final=900.0,
        ic=PiecewiseIC((40000.0,), (ICPiece(rl, vl, phl), ICPiece(rr, vr, phr))),
        bc_left=FreeBoundary(),
        bc_right=FreeBoundary(),
        output=OutputPlan(snapshots=(0.0, 900.0)))


def builtin_scenarios() -> dict[str, Scenario]:
    """The named catalog: test1..test12, example2..example4, and diagnostics."""
    cat: dict[str, Scenario] = {}
    for n in range(1, 13):
        cat[f"test{n}"] = _riemann_scenario(n)

    length = 10000.0
    cat["example2"] = Scenario(
        params=ModelParams(),
        grid=Grid(0.0, length, 400),
        cfl=0.4,
        t_final=250.0,
        ic=PiecewiseIC(
            (length / 3.0, 2.0 * length / 3.0),
            (ICPiece(0.01, 30.0, Phase.FREE),
             ICPiece(0.03, 17.729, Phase.CONGESTED),
             ICPiece(0.04, 11.812, Phase.CONGESTED))),
        bc_left=DirichletConstant(rho=0.01),
        bc_right=FreeBoundary(),
        output=OutputPlan(snapshots=(0.0, 50.0, 200.0, 250.0),
                          trajectories=_TRAJ))
    cat["example3"] = Scenario(
        params=ModelParams(),
        grid=Grid(0.0, length, 400),
        cfl=0.4,
        t_final=500.0,
        ic=PiecewiseIC(
            (length / 3.0, 2.0 * length / 3.0),
            (ICPiece(0.01, 30.0, Phase.FREE),
             ICPiece(0.03, 17.729, Phase.CONGESTED),
             ICPiece(0.05, 7.941, Phase.CONGESTED))),
        bc_left=FreeBoundary(),
        bc_right=DirichletPulse(switch_time=2.0 * 500.0 / 3.0),
        output=OutputPlan(snapshots=(0.0, 50.0, 200.0, 350.0, 500.0),
                          trajectories=_TRAJ))
    cat["example4"] = Scenario(
        params=ModelParams(),
        grid=Grid(0.0, length, 400),
        cfl=0.4,
        t_final=1500.0,
        ic=PiecewiseIC(
            (length / 2.0, 3.0 * length / 5.0),
            (ICPiece(0.015, 30.0, Phase.FREE),
             ICPiece(0.08, 4.375, Phase.CONGESTED),
             ICPiece(0.025, 21.94, Phase.CONGESTED))),
        bc_left=FreeBoundary(),
        bc_right=DirichletStopAndGo(),
        output=OutputPlan(snapshots=(0.0, 1500.0), trajectories=_TRAJ))

    cat["advection_smooth"] = Scenario(
        params=ModelParams(),
        grid=Grid(0.0, 16000.0, 160),
        cfl=0.4,
        t_final=80.0,
        ic=GaussianFreeIC(base_rho=0.01, amp_rho=0.006, center=6000.0,
                          width=1500.0),
        bc_left=FreeBoundary(),
        bc_right=FreeBoundary(),
        output=OutputPlan(snapshots=(0.0, 80.0)))
    cat["uniform_const"] = Scenario(
        params=ModelParams(),
        grid=Grid(0.0, 10000.0, 100),
        cfl=0.4,
        t_final=100.0,
        ic=PiecewiseIC((), (ICPiece(0.08, 3.75, Phase.CONGESTED),)),
        bc_left=FreeBoundary(),
        bc_right=FreeBoundary(),
        output=OutputPlan(snapshots=(0.0, 100.0)))
    return {name: _validate(sc) for name, sc in cat.items()}
