"""Central-upwind numerical flux with built-in anti-diffusion.

The flux at an interface is assembled from the physical fluxes of the two
one-sided point values, one-sided local propagation speeds, and a
minmod-limited anti-diffusion correction.  The local speeds depend on which
phase each side is in: the free phase contributes the fixed speeds
(v_max, 0), the congested phase its two characteristic speeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    EPS_RHO,
    ModelParams,
    Phase,
    State,
    congested_speed,
    lambda_slow,
)

# Relative guard for the degenerate a_plus == a_minus == 0 denominator.
EPS_SPEED_REL = 1e-12


@dataclass(frozen=True)
class LocalSpeeds:
    """One-sided local propagation speeds at an interface."""

    a_plus: float   # >= 0
    a_minus: float  # <= 0


class DegenerateSpeeds(Exception):
    """Both local speeds vanish; the caller falls back to a mean flux."""


def _speeds_arrays(rho_m, q_m, ph_m, rho_p, q_p, ph_p, p: ModelParams):
    rg_m = np.maximum(rho_m, EPS_RHO)
    rg_p = np.maximum(rho_p, EPS_RHO)
    lam1_m = lambda_slow(rg_m, q_m, p)
    lam1_p = lambda_slow(rg_p, q_p, p)
    lam2_m = congested_speed(rg_m, q_m, p)
    lam2_p = congested_speed(rg_p, q_p, p)
    cong_m = ph_m == Phase.CONGESTED
    cong_p = ph_p == Phase.CONGESTED
    both_cong = cong_m & cong_p
    a_plus = np.where(both_cong,
                      np.maximum(np.maximum(lam2_m, lam2_p), 0.0),
                      p.v_max)
    a_minus = np.where(cong_m | cong_p,
                       np.minimum(np.where(both_cong,
                                           np.minimum(lam1_m, lam1_p),
                                           np.where(cong_m, lam1_m, lam1_p)),
                                  0.0),
                       0.0)
    return a_plus, a_minus


def _flux_arrays(rho, q, phase, p: ModelParams):
    v = np.where(phase == Phase.FREE, p.v_max,
                 congested_speed(np.maximum(rho, EPS_RHO), q, p))
    f_q = np.where(phase == Phase.FREE, q * p.v_max, (q - p.q_eq) * v)
    return rho * v, f_q


def _minmod2(a, b):
    return np.where((a > 0.0) & (b > 0.0), np.minimum(a, b),
                    np.where((a < 0.0) & (b < 0.0), np.maximum(a, b), 0.0))


def cu_flux_arrays(rho_m, q_m, ph_m, rho_p, q_p, ph_p, p: ModelParams):
    """Vectorised central-upwind flux.  Returns (mass flux, q flux,
    a_plus, a_minus) per interface."""
    a_plus, a_minus = _speeds_arrays(rho_m, q_m, ph_m, rho_p, q_p, ph_p, p)
    f_rho_m, f_q_m = _flux_arrays(rho_m, q_m, ph_m, p)
    f_rho_p, f_q_p = _flux_arrays(rho_p, q_p, ph_p, p)
    den = a_plus - a_minus
    degenerate = den <= EPS_SPEED_REL * p.v_max
    safe = np.where(degenerate, 1.0, den)

    star_rho = (a_plus * rho_p - a_minus * rho_m - (f_rho_p - f_rho_m)) / safe
    star_q = (a_plus * q_p - a_minus * q_m - (f_q_p - f_q_m)) / safe
    corr_rho = rho_p - rho_m - _minmod2(rho_p - star_rho, star_rho - rho_m)
    corr_q = q_p - q_m - _minmod2(q_p - star_q, star_q - q_m)

    spread = a_plus * a_minus / safe
    out_rho = (a_plus * f_rho_m - a_minus * f_rho_p) / safe + spread * corr_rho
    out_q = (a_plus * f_q_m - a_minus * f_q_p) / safe + spread * corr_q
    # One vanishing speed collapses the formula to pure upwinding; take that
    # branch exactly instead of through the rounded division.
    out_rho = np.where(a_minus == 0.0, f_rho_m,
                       np.where(a_plus == 0.0, f_rho_p, out_rho))
    out_q = np.where(a_minus == 0.0, f_q_m,
                     np.where(a_plus == 0.0, f_q_p, out_q))
    out_rho = np.where(degenerate, 0.5 * (f_rho_m + f_rho_p), out_rho)
    out_q = np.where(degenerate, 0.5 * (f_q_m + f_q_p), out_q)
    return out_rho, out_q, a_plus, a_minus


# -- single-interface API -------------------------------------------------------

def local_speeds(u_minus: State, u_plus: State, phases: tuple[Phase, Phase],
                 p: ModelParams) -> LocalSpeeds:
    """One-sided local speeds for one interface."""
    a_plus, a_minus = _speeds_arrays(
        np.asarray(u_minus.rho), np.asarray(u_minus.q), np.asarray(int(phases[0])),
        np.asarray(u_plus.rho), np.asarray(u_plus.q), np.asarray(int(phases[1])), p)
    return LocalSpeeds(float(a_plus[()]), float(a_minus[()]))


def u_star(u_minus: State, u_plus: State, f_minus: tuple[float, float],
           f_plus: tuple[float, float], speeds: LocalSpeeds,
           p: ModelParams) -> State:
    """Intermediate state entering the anti-diffusion correction."""
    den = speeds.a_plus - speeds.a_minus
    if den <= EPS_SPEED_REL * p.v_max:
        raise DegenerateSpeeds(f"a_plus - a_minus = {den!r}")
    rho = (speeds.a_plus * u_plus.rho - speeds.a_minus * u_minus.rho
           - (f_plus[0] - f_minus[0])) / den
    q = (speeds.a_plus * u_plus.q - speeds.a_minus * u_minus.q
         - (f_plus[1] - f_minus[1])) / den
    return State(rho, q)


def anti_diffusion_q(u_minus: State, u_plus: State, star: State) -> State:
    """Componentwise minmod of (plus - star) and (star - minus)."""
    return State(
        float(_minmod2(u_plus.rho - star.rho, star.rho - u_minus.rho)),
        float(_minmod2(u_plus.q - star.q, star.q - u_minus.q)))


def cu_numerical_flux(u_minus: State, u_plus: State,
                      phases: tuple[Phase, Phase],
                      p: ModelParams) -> tuple[float, float]:
    """Central-upwind flux for one interface; falls back to the mean of the
    one-sided fluxes when both local speeds vanish."""
    f_rho, f_q, _, _ = cu_flux_arrays(
        np.asarray(u_minus.rho), np.asarray(u_minus.q), np.asarray(int(phases[0])),
        np.asarray(u_plus.rho), np.asarray(u_plus.q), np.asarray(int(phases[1])), p)
    return float(f_rho[()]), float(f_q[()])
