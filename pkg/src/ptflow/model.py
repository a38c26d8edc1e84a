"""Algebra of the two-phase (free / congested) traffic flow model.

A traffic state is a pair (rho, q): rho is the vehicle density and q is a
flow-like variable equal to the inverse of the drivers' average time gap.
Admissible states live either on the one-dimensional free-flow curve
(rho <= rho_crit_free, q slaved to rho, vehicles travel at v_max) or inside
the two-dimensional congested region bounded below by a line through
(0, q_eq), above by a second line through (0, q_eq) and by the curve on
which the congested speed equals its cap v_cong_max.

Everything in this module is a pure function of its arguments; the formula
helpers accept numpy arrays as well as floats.  Units are SI throughout:
veh/m for densities, m/s for speeds, veh/s for q.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

# Density guard for divisions by rho.  Congested states met in practice have
# rho > rho_crit_free, so this only protects against corrupted input.
EPS_RHO = 1e-12
# Absolute tolerance (in q units) for admissible-set membership tests.
EPS_MEM = 1e-9


class ModelError(ValueError):
    """Argument outside an operation's admissible domain."""


class Phase(enum.IntEnum):
    FREE = 0
    CONGESTED = 1


class Membership(enum.IntEnum):
    FREE_CURVE = 0
    CONGESTED_REGION = 1
    OUTSIDE = 2


@dataclass(frozen=True)
class State:
    """Conserved pair (density, inverse time gap) at a point or cell."""

    rho: float
    q: float


@dataclass(frozen=True)
class ModelParams:
    """Model constants.  Defaults are the standard calibration used by all
    built-in scenarios (free speed 30 m/s, jam density 0.16 veh/m, ...).

    rho_crit_cong is derived at construction: it is the density at which the
    upper bounding line of the congested region meets the speed-cap curve,
    so the congested upper bound switches from the curve to the line there.
    """

    v_max: float = 30.0           # free-flow speed (m/s)
    v_cong_max: float = 24.0      # speed cap in the congested region (m/s)
    rho_max: float = 0.16         # jam density (veh/m)
    q_eq: float = 0.6             # equilibrium inverse time gap (veh/s)
    rho_crit_free: float = 0.02   # largest free-flow density (veh/m)
    q_max: float = 0.93186        # largest admissible q, reached at jam (veh/s)
    q_min: float = 0.18856        # smallest admissible q, reached at jam (veh/s)
    rho_crit_cong: float = field(init=False)

    def __post_init__(self) -> None:
        if not (0.0 < self.v_cong_max <= self.v_max):
            raise ModelError("require 0 < v_cong_max <= v_max")
        if not (self.q_min < self.q_eq < self.q_max):
            raise ModelError("require q_min < q_eq < q_max")
        if not (0.0 < self.rho_crit_free < self.rho_max):
            raise ModelError("require 0 < rho_crit_free < rho_max")
        b = self.rho_max * self.v_cong_max + 2.0 * self.q_eq - self.q_max
        disc = b * b + 4.0 * (self.q_max - self.q_eq) * self.q_eq
        rc = 2.0 * self.rho_max * self.q_eq / (b + math.sqrt(disc))
        object.__setattr__(self, "rho_crit_cong", rc)
        if not (self.rho_crit_free < rc < self.rho_max):
            raise ModelError("critical congested density outside "
                             "(rho_crit_free, rho_max)")
        gap = q_upper_line(rc, self) - q_speed_cap(rc, self)
        if abs(gap) > 1e-12 * abs(q_upper_line(rc, self)):
            raise ModelError("upper line / speed-cap intersection check failed")


# -- admissible-set geometry -------------------------------------------------

def q_upper_line(rho, p: ModelParams):
    """Upper bounding line of the congested region (q_eq at rho=0, q_max at jam)."""
    return p.q_eq + (p.q_max - p.q_eq) / p.rho_max * rho


def q_lower_line(rho, p: ModelParams):
    """Lower bounding line of the congested region (q_eq at rho=0, q_min at jam)."""
    return p.q_eq + (p.q_min - p.q_eq) / p.rho_max * rho


def q_speed_cap(rho, p: ModelParams):
    """Curve on which the congested speed equals v_cong_max.

    Singular at the jam density; rho must satisfy rho < rho_max.
    """
    if np.any(np.asarray(rho) >= p.rho_max):
        raise ModelError("speed-cap curve is singular at the jam density")
    return _speed_cap(rho, p)


def _speed_cap(rho, p: ModelParams):
    # Total variant with a guarded denominator; only meaningful away from jam.
    return rho * p.rho_max * p.v_cong_max / np.maximum(p.rho_max - rho, EPS_RHO)


def q_free(rho, p: ModelParams):
    """q on the free-flow curve; defined for 0 <= rho <= rho_crit_free."""
    r = np.asarray(rho)
    if np.any(r < 0.0) or np.any(r > p.rho_crit_free):
        raise ModelError("free-flow curve is only defined for "
                         "0 <= rho <= rho_crit_free")
    return _free_q(rho, p)


def _free_q(rho, p: ModelParams):
    # Algebraic extension of the free-flow q relation, used internally on
    # reconstructed values before they are projected back to admissibility.
    return p.v_max * rho * p.rho_max / np.maximum(p.rho_max - rho, EPS_RHO)


# -- speeds, fluxes, eigenstructure ------------------------------------------

def congested_speed(rho, q, p: ModelParams):
    """Congested-phase speed (1 - rho/rho_max) * q / rho.  Caller guards rho."""
    return (1.0 - rho / p.rho_max) * q / rho


def lambda_slow(rho, q, p: ModelParams):
    """Smaller characteristic speed of the congested system."""
    return (q - p.q_eq) * (1.0 / rho - 2.0 / p.rho_max) - p.q_eq / p.rho_max


def speed(s: State, phase: Phase, p: ModelParams) -> float:
    """Traffic speed of a state: v_max in free flow, the congested closure
    otherwise."""
    if phase == Phase.FREE:
        return p.v_max
    if s.rho < EPS_RHO:
        raise ModelError(f"congested speed undefined at rho={s.rho!r}")
    return congested_speed(s.rho, s.q, p)


def flux(s: State, phase: Phase, p: ModelParams) -> tuple[float, float]:
    """Conservative flux (mass flux, q flux) of a state in the given phase."""
    if phase == Phase.FREE:
        return (s.rho * p.v_max, s.q * p.v_max)
    v = speed(s, phase, p)
    return (s.rho * v, (s.q - p.q_eq) * v)


def eigen_congested(s: State, p: ModelParams) -> tuple[float, float]:
    """Eigenvalues (slow, fast) of the congested flux Jacobian at a state."""
    if s.rho < EPS_RHO:
        raise ModelError(f"eigenvalues undefined at rho={s.rho!r}")
    return (lambda_slow(s.rho, s.q, p), congested_speed(s.rho, s.q, p))


def jacobian_congested(s: State, p: ModelParams) -> np.ndarray:
    """Flux Jacobian of the congested system at a state (2x2 array)."""
    if s.rho < EPS_RHO:
        raise ModelError(f"Jacobian undefined at rho={s.rho!r}")
    rho, q, rm = s.rho, s.q, p.rho_max
    return np.array([
        [-q / rm, (rm - rho) / rm],
        [q * (p.q_eq - q) / rho ** 2, (p.q_eq - 2.0 * q) * (rho - rm) / (rho * rm)],
    ])


def state_from_density_speed(rho: float, v: float, phase: Phase,
                             p: ModelParams) -> State:
    """Recover the conserved state from (density, speed) by inverting the
    speed closure of the given phase."""
    if phase == Phase.FREE:
        if abs(v - p.v_max) > 1e-12 * p.v_max:
            raise ModelError("free-flow states must travel at v_max")
        return State(rho, float(q_free(rho, p)))
    if not (0.0 < v and rho < p.rho_max):
        raise ModelError("congested inversion needs 0 < v and rho < rho_max")
    return State(rho, rho * v / (1.0 - rho / p.rho_max))


# -- membership ---------------------------------------------------------------

def membership_values(rho, q, p: ModelParams):
    """Vectorised admissible-set membership (int array of Membership values)."""
    rho = np.asarray(rho, dtype=float)
    q = np.asarray(q, dtype=float)
    on_free = (rho <= p.rho_crit_free) & (np.abs(q - _free_q(rho, p)) <= EPS_MEM)
    upper = np.where(rho < p.rho_crit_cong,
                     np.minimum(q_upper_line(rho, p), _speed_cap(rho, p)),
                     q_upper_line(rho, p))
    in_cong = ((rho >= p.rho_crit_free - EPS_MEM)
               & (rho <= p.rho_max)
               & (q >= q_lower_line(rho, p) - EPS_MEM)
               & (q <= upper + EPS_MEM))
    return np.where(on_free, np.int8(Membership.FREE_CURVE),
                    np.where(in_cong, np.int8(Membership.CONGESTED_REGION),
                             np.int8(Membership.OUTSIDE)))


def classify(s: State, p: ModelParams) -> Membership:
    """Admissible-set membership of a single state."""
    return Membership(int(membership_values(s.rho, s.q, p)[()]))


def phase_of(membership: int) -> Phase:
    """Phase implied by a (non-outside) membership value."""
    if membership == Membership.OUTSIDE:
        raise ModelError("state outside the admissible set has no phase")
    return Phase.FREE if membership == Membership.FREE_CURVE else Phase.CONGESTED
