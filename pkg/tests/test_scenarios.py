import json

import numpy as np
import pytest

from ptflow.model import Membership, ModelParams, Phase, q_free, \
    state_from_density_speed
from ptflow.scenarios import (
    DirichletConstant,
    DirichletPulse,
    DirichletStopAndGo,
    FreeBoundary,
    GaussianFreeIC,
    PiecewiseIC,
    Scenario,
    ScenarioError,
    bc_q_closure,
    boundary_state,
    build_initial_field,
    builtin_scenarios,
    parse_scenario,
    serialize_scenario,
)


def _minimal_doc(**overrides):
    doc = {
        "schema_version": 1,
        "grid": {"x_left": 0.0, "x_right": 8000.0, "n_cells": 40},
        "t_final": 100.0,
        "ic": {"breakpoints": [], "pieces": [
            {"rho": 0.08, "v": 3.75, "phase": "congested"}]},
        "bc_left": {"kind": "free"},
        "bc_right": {"kind": "free"},
        "output": {"snapshots": [0.0, 100.0]},
    }
    doc.update(overrides)
    return doc


def test_bc_q_closure(params):
    # free branch equals the free-flow curve
    assert bc_q_closure(0.01, 30.0 / 7.0, params) == pytest.approx(
        0.32, rel=1e-14)
    # congested branch, hand-evaluated blend; the road scenarios' initial
    # data quote the same values rounded to 4 digits
    assert bc_q_closure(0.05, 30.0 / 7.0, params) - params.q_eq == \
        pytest.approx(-0.0225, abs=5e-5)
    assert bc_q_closure(0.03, 30.0 / 7.0, params) == pytest.approx(
        0.6546105702333197, rel=1e-12)
    with pytest.raises(ScenarioError):
        bc_q_closure(0.0, 30.0 / 7.0, params)
    with pytest.raises(ScenarioError):
        bc_q_closure(0.16, 30.0 / 7.0, params)


def test_boundary_state_constant(params):
    for t in (0.0, 17.3, 1e4):
        s = boundary_state(DirichletConstant(rho=0.01), t, params)
        assert s.rho == 0.01
        assert s.q == pytest.approx(0.32, rel=1e-14)


def test_boundary_state_stop_and_go_segments(params):
    spec = DirichletStopAndGo()
    assert boundary_state(spec, 1100.0, params).rho == 0.03
    assert boundary_state(spec, 1300.0, params).rho == 0.01
    # pulse train: one sech^2 peak per 100 s window
    s = boundary_state(spec, 50.0, params)
    assert s.rho == pytest.approx(0.06, abs=1e-6)
    s = boundary_state(spec, 950.0, params)
    assert s.rho == pytest.approx(0.06, abs=1e-6)
    # the non-periodic variant has its single pulse near t = 50
    lit = DirichletStopAndGo(periodic=False)
    assert boundary_state(lit, 50.0, params).rho == pytest.approx(0.06,
                                                                  abs=1e-4)
    assert boundary_state(lit, 950.0, params).rho == pytest.approx(0.03,
                                                                   abs=1e-6)
    with pytest.raises(ScenarioError):
        boundary_state(spec, -1.0, params)


def test_boundary_state_continuous_within_segments(params):
    spec = DirichletPulse(switch_time=1000.0 / 3.0)
    for t0, t1 in ((0.0, 333.0), (334.0, 500.0)):
        ts = np.linspace(t0, t1, 2000)
        rho = np.array([boundary_state(spec, float(t), params).rho
                        for t in ts])
        assert np.max(np.abs(np.diff(rho))) < 5e-4
    sg = DirichletStopAndGo()
    ts = np.linspace(100.0, 199.9, 1500)  # inside one pulse window
    rho = np.array([boundary_state(sg, float(t), params).rho for t in ts])
    assert np.max(np.abs(np.diff(rho))) < 5e-4


def test_pulse_family_rejected_when_range_reaches_overflow(params):
    # amplitude drives rho(t) towards 0.35 > rho_max near the late pulse
    # center; the loader must reject t ranges that reach it
    doc = _minimal_doc(t_final=1500.0,
                       bc_right={"kind": "dirichlet_pulse"},
                       output={"snapshots": []})
    with pytest.raises(ScenarioError, match="rho_max"):
        parse_scenario(json.dumps(doc))


def test_parse_defaults(params):
    sc = parse_scenario(json.dumps(_minimal_doc()))
    assert sc.cfl == 0.4
    assert sc.params == ModelParams()
    assert isinstance(sc.bc_left, FreeBoundary)


def test_parse_errors():
    with pytest.raises(ScenarioError, match="cfl"):
        parse_scenario(json.dumps(_minimal_doc(cfl=1.5)))
    with pytest.raises(ScenarioError, match="missing required key"):
        parse_scenario(json.dumps({"schema_version": 1}))
    with pytest.raises(ScenarioError, match="schema_version"):
        parse_scenario(json.dumps(_minimal_doc(schema_version=99)))
    with pytest.raises(ScenarioError, match="not valid JSON"):
        parse_scenario("{nope")
    with pytest.raises(ScenarioError, match="snapshot"):
        parse_scenario(json.dumps(_minimal_doc(
            output={"snapshots": [200.0]})))
    doc = _minimal_doc()
    doc["ic"]["pieces"][0]["rho"] = 0.2  # beyond the jam density
    with pytest.raises(ScenarioError):
        parse_scenario(json.dumps(doc))
    doc = _minimal_doc()
    doc["bc_left"] = {"kind": "sticky"}
    with pytest.raises(ScenarioError, match="unknown kind"):
        parse_scenario(json.dumps(doc))


def test_breakpoint_validation():
    doc = _minimal_doc()
    doc["ic"] = {"breakpoints": [4000.0, 2000.0], "pieces": [
        {"rho": 0.01, "v": 30.0, "phase": "free"}] * 3}
    with pytest.raises(ScenarioError, match="ascending"):
        parse_scenario(json.dumps(doc))
    doc["ic"]["breakpoints"] = [2000.0, 9000.0]
    with pytest.raises(ScenarioError, match="inside the domain"):
        parse_scenario(json.dumps(doc))
    doc["ic"] = {"breakpoints": [2000.0], "pieces": [
        {"rho": 0.01, "v": 30.0, "phase": "free"}]}
    with pytest.raises(ScenarioError, match="one more piece"):
        parse_scenario(json.dumps(doc))


def test_catalog_contents(catalog):
    names = {f"test{i}" for i in range(1, 13)}
    names |= {"example2", "example3", "example4", "advection_smooth",
              "uniform_const"}
    assert names <= set(catalog)

    sc = catalog["test1"]
    assert (sc.grid.x_left, sc.grid.x_right) == (0.0, 80000.0)
    assert sc.grid.n_cells == 400 and sc.grid.dx == 200.0
    assert sc.t_final == 900.0 and sc.cfl == 0.4
    assert sc.ic.breakpoints == (40000.0,)
    assert sc.ic.pieces[0].rho == 0.011 and sc.ic.pieces[0].phase == Phase.FREE

    sc = catalog["test7"]
    left, right = sc.ic.pieces
    assert (left.rho, left.v, left.phase) == (0.0375, 13.838, Phase.CONGESTED)
    assert (right.rho, right.v, right.phase) == (0.128, 0.42321,
                                                 Phase.CONGESTED)

    sc = catalog["example2"]
    assert sc.ic.breakpoints == (10000.0 / 3.0, 20000.0 / 3.0)
    assert [p.rho for p in sc.ic.pieces] == [0.01, 0.03, 0.04]
    assert isinstance(sc.bc_left, DirichletConstant)

    sc = catalog["example4"]
    bc = sc.bc_right
    assert isinstance(bc, DirichletStopAndGo)
    assert (bc.w, bc.t1, bc.a) == (10.25, 3000.0, 30.0 / 7.0)


def test_catalog_round_trip(catalog):
    for name, sc in catalog.items():
        doc = serialize_scenario(sc)
        assert parse_scenario(doc) == sc, name


def test_riemann_table_q_values(catalog, params):
    # q - q_eq implied by each catalog Riemann state, to 4-5 digits
    table = {
        1: (-0.2456, 0.1684), 2: (-0.2456, 0.0906), 3: (-0.3639, 0.02325),
        4: (-0.5698, -0.1149), 5: (-0.5698, -0.02175),
        6: (-0.3291, 0.07778), 7: (0.07778, -0.3291),
        8: (0.1684, -0.2456), 9: (0.0906, -0.2456), 10: (0.02324, -0.3639),
        11: (-0.1149, -0.5698), 12: (-0.02175, -0.5698),
    }
    for n, (dl, dr) in table.items():
        sc = catalog[f"test{n}"]
        for piece, want in zip(sc.ic.pieces, (dl, dr)):
            s = state_from_density_speed(piece.rho, piece.v, piece.phase,
                                         params)
            assert s.q - params.q_eq == pytest.approx(want, abs=5e-5), n


def test_initial_field_admissible(catalog, params):
    from ptflow.model import membership_values

    for name, sc in catalog.items():
        f = build_initial_field(sc)
        m = membership_values(f.rho, f.q, params)
        assert not np.any(m == Membership.OUTSIDE), name


def test_initial_field_gaussian(catalog, params):
    sc = catalog["advection_smooth"]
    f = build_initial_field(sc)
    assert f.rho.max() <= params.rho_crit_free
    assert f.rho.max() == pytest.approx(0.016, abs=1e-4)
    np.testing.assert_allclose(f.q, np.asarray(q_free(f.rho, params)),
                               rtol=1e-13)
    assert np.all(f.phase == Phase.FREE)


def test_gaussian_ic_validation():
    doc = _minimal_doc()
    doc["ic"] = {"kind": "gaussian_free", "base_rho": 0.01, "amp_rho": 0.05,
                 "center": 4000.0, "width": 500.0}
    with pytest.raises(ScenarioError, match="free flow"):
        parse_scenario(json.dumps(doc))


def test_breakpoint_cell_assignment(params):
    # a breakpoint exactly on a cell center assigns that cell to the left
    # piece ("x <= breakpoint" convention)
    sc = parse_scenario(json.dumps(_minimal_doc(ic={
        "breakpoints": [4100.0],
        "pieces": [{"rho": 0.01, "v": 30.0, "phase": "free"},
                   {"rho": 0.08, "v": 3.75, "phase": "congested"}]})))
    f = build_initial_field(sc)
    x = sc.grid.centers()
    i = int(np.flatnonzero(x == 4100.0)[0])
    assert f.rho[i] == 0.01 and f.rho[i + 1] == 0.08
