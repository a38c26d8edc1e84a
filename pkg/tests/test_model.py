import math

import numpy as np
import pytest

from ptflow.model import (
    Membership,
    ModelError,
    ModelParams,
    Phase,
    State,
    classify,
    eigen_congested,
    flux,
    jacobian_congested,
    membership_values,
    q_free,
    q_lower_line,
    q_speed_cap,
    q_upper_line,
    speed,
    state_from_density_speed,
)

from conftest import random_congested


def test_default_params():
    p = ModelParams()
    assert p.v_max == 30.0 and p.rho_max == 0.16
    assert 0.0 < p.rho_crit_free < p.rho_crit_cong < p.rho_max
    assert p.q_min < p.q_eq < p.q_max


def test_critical_congested_density_matches_bisection_oracle(params):
    # Independent oracle: bisect the gap between the upper line and the
    # speed-cap curve.
    lo, hi = params.rho_crit_free, 0.9 * params.rho_max
    f = lambda r: q_upper_line(r, params) - q_speed_cap(r, params)
    assert f(lo) * f(hi) < 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    assert math.isclose(params.rho_crit_cong, 0.5 * (lo + hi), rel_tol=1e-12)
    assert math.isclose(params.rho_crit_cong, 0.02309885635478677,
                        rel_tol=1e-12)
    gap = q_upper_line(params.rho_crit_cong, params) - q_speed_cap(
        params.rho_crit_cong, params)
    assert abs(gap) <= 1e-12 * q_upper_line(params.rho_crit_cong, params)


def test_param_validation():
    with pytest.raises(ModelError):
        ModelParams(v_cong_max=31.0)  # above v_max
    with pytest.raises(ModelError):
        ModelParams(q_min=0.7)  # above q_eq
    with pytest.raises(ModelError):
        ModelParams(rho_crit_free=0.0)


def test_speed_congested(params):
    assert speed(State(0.16, 0.6), Phase.CONGESTED, params) == 0.0
    # catalog Riemann state rho=0.0825 at 4.5113 m/s; q and V are quoted
    # rounded to 4-5 digits independently, so allow 2e-4
    assert speed(State(0.0825, 0.7684), Phase.CONGESTED, params) == \
        pytest.approx(4.5113, abs=2e-4)
    assert speed(State(0.08, 0.6), Phase.CONGESTED, params) == \
        pytest.approx(3.75, rel=1e-12)
    assert speed(State(0.01, 0.32), Phase.FREE, params) == 30.0
    with pytest.raises(ModelError):
        speed(State(0.0, 0.3), Phase.CONGESTED, params)


def test_q_free(params):
    assert q_free(0.0, params) == 0.0
    assert q_free(0.01, params) == pytest.approx(0.32, rel=1e-12)
    assert q_free(0.02, params) == pytest.approx(0.6857142857142856,
                                                 rel=1e-12)
    with pytest.raises(ModelError):
        q_free(0.03, params)
    with pytest.raises(ModelError):
        q_free(-0.001, params)


def test_q_free_strictly_increasing(params):
    rho = np.linspace(1e-6, params.rho_crit_free, 500)
    vals = q_free(rho, params)
    assert np.all(np.diff(vals) > 0)


def test_state_from_density_speed(params):
    s = state_from_density_speed(0.128, 0.42321, Phase.CONGESTED, params)
    assert s.q - params.q_eq == pytest.approx(-0.3291, abs=5e-5)
    s = state_from_density_speed(0.0825, 4.5113, Phase.CONGESTED, params)
    assert s.q - params.q_eq == pytest.approx(0.1684, abs=5e-5)
    s = state_from_density_speed(0.02, 30.0, Phase.FREE, params)
    assert s.q == pytest.approx(q_free(0.02, params), rel=1e-15)
    with pytest.raises(ModelError):
        state_from_density_speed(0.01, 25.0, Phase.FREE, params)
    with pytest.raises(ModelError):
        state_from_density_speed(0.16, 1.0, Phase.CONGESTED, params)


def test_speed_roundtrip(params):
    rng = np.random.default_rng(7)
    rho, q = random_congested(rng, params, 200)
    for r, qq in zip(rho, q):
        v = speed(State(r, qq), Phase.CONGESTED, params)
        s = state_from_density_speed(r, v, Phase.CONGESTED, params)
        assert math.isclose(speed(s, Phase.CONGESTED, params), v,
                            rel_tol=1e-12)


def test_flux(params):
    assert flux(State(0.16, 0.6), Phase.CONGESTED, params) == (0.0, 0.0)
    f = flux(State(0.01, 0.32), Phase.FREE, params)
    assert f == pytest.approx((0.3, 9.6), rel=1e-12)
    f = flux(State(0.08, 0.6), Phase.CONGESTED, params)
    assert f == pytest.approx((0.3, 0.0), abs=1e-15)


def test_free_mass_flux_linear_in_density(params):
    rho = np.linspace(0.0, params.rho_crit_free, 50)
    for r in rho:
        f = flux(State(r, float(q_free(r, params))), Phase.FREE, params)
        assert math.isclose(f[0], 30.0 * r, rel_tol=1e-14, abs_tol=1e-300)


def test_eigen_congested_examples(params):
    lam1, lam2 = eigen_congested(State(0.08, 0.6), params)
    assert lam1 == pytest.approx(-3.75, rel=1e-12)
    assert lam2 == pytest.approx(3.75, rel=1e-12)
    lam1, lam2 = eigen_congested(State(0.0375, 0.67778), params)
    assert lam1 == pytest.approx(-2.648, abs=1e-3)
    assert lam2 == pytest.approx(13.838, abs=1e-3)
    lam1, lam2 = eigen_congested(State(0.128, 0.2709), params)
    assert lam1 == pytest.approx(-2.207, abs=1e-3)
    assert lam2 == pytest.approx(0.42321, abs=1e-4)
    with pytest.raises(ModelError):
        eigen_congested(State(0.0, 0.3), params)


def test_eigen_congested_matches_numpy_eig(params):
    # Independent oracle: numerical eigenvalues of the flux Jacobian.
    rng = np.random.default_rng(11)
    rho, q = random_congested(rng, params, 100)
    for r, qq in zip(rho, q):
        s = State(r, qq)
        lam = sorted(np.linalg.eigvals(jacobian_congested(s, params)).real)
        lam1, lam2 = eigen_congested(s, params)
        assert math.isclose(lam1, lam[0], rel_tol=1e-9, abs_tol=1e-11)
        assert math.isclose(lam2, lam[1], rel_tol=1e-9, abs_tol=1e-11)


def test_eigenvalue_ordering_property(params):
    rng = np.random.default_rng(3)
    rho, q = random_congested(rng, params, 1000)
    for r, qq in zip(rho, q):
        lam1, lam2 = eigen_congested(State(r, qq), params)
        assert lam1 <= lam2 <= params.v_cong_max + 1e-9 <= params.v_max


def test_boundary_curves(params):
    assert q_upper_line(0.0, params) == 0.6
    assert q_lower_line(0.0, params) == 0.6
    assert q_upper_line(0.16, params) == pytest.approx(0.93186, rel=1e-12)
    assert q_lower_line(0.16, params) == pytest.approx(0.18856, rel=1e-12)
    assert q_speed_cap(0.0225, params) == pytest.approx(0.6283636363636363,
                                                        rel=1e-12)
    with pytest.raises(ModelError):
        q_speed_cap(0.16, params)
    rho = np.linspace(0.0, params.rho_max, 200)
    assert np.all(q_upper_line(rho, params) >= q_lower_line(rho, params))


def test_classify(params):
    assert classify(State(0.01, 0.32), params) == Membership.FREE_CURVE
    assert classify(State(0.08, 0.6), params) == Membership.CONGESTED_REGION
    assert classify(State(0.01, 0.9), params) == Membership.OUTSIDE
    # just above the speed-cap curve in the low-density congested range
    assert classify(State(0.0225, 0.64), params) == Membership.OUTSIDE


def test_membership_values_vectorised(params):
    rho = np.array([0.01, 0.08, 0.01])
    q = np.array([0.32, 0.6, 0.9])
    m = membership_values(rho, q, params)
    assert list(m) == [Membership.FREE_CURVE, Membership.CONGESTED_REGION,
                       Membership.OUTSIDE]
