"""Projection of arbitrary (rho, q) pairs onto the admissible set.

Only q is ever modified, so the projection never adds or removes vehicles.
Already-admissible states pass through unchanged.  The four cases:

  I   rho <= rho_crit_free            -> snap q onto the free-flow curve
  II  rho <= rho_crit_cong, q above the speed-cap curve -> drop q onto it
  III rho >  rho_crit_cong, q above the upper line      -> drop q onto it
  IV  rho >  rho_crit_free, q below the lower line      -> lift q onto it
"""

from __future__ import annotations

import numpy as np

from .grid import CellField
from .model import (
    Membership,
    ModelError,
    ModelParams,
    State,
    _free_q,
    _speed_cap,
    membership_values,
    q_lower_line,
    q_upper_line,
)

# Densities may leave [0, rho_max] by round-off during time stepping; anything
# beyond this relative dust is treated as corrupted input.
RHO_DUST = 1e-14


def project_values(rho, q, p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised projection.  Returns (rho, q) arrays; rho is unchanged except
    for clamping round-off dust at the edges of [0, rho_max]."""
    rho = np.asarray(rho, dtype=float)
    q = np.asarray(q, dtype=float)
    dust = RHO_DUST * p.rho_max
    if np.any(rho < -dust) or np.any(rho > p.rho_max + dust):
        bad = np.flatnonzero((np.atleast_1d(rho) < -dust)
                             | (np.atleast_1d(rho) > p.rho_max + dust))
        raise ModelError(
            f"density outside [0, rho_max] cannot be projected "
            f"(first offender at index {bad[0]}: rho={np.atleast_1d(rho)[bad[0]]!r})")
    rho = np.clip(rho, 0.0, p.rho_max)

    member = membership_values(rho, q, p)
    free_side = rho <= p.rho_crit_free
    cap_side = rho <= p.rho_crit_cong
    low = q_lower_line(rho, p)
    target = np.where(
        free_side, _free_q(rho, p),
        np.where(q < low, low,
                 np.where(cap_side, _speed_cap(rho, p), q_upper_line(rho, p))))
    q_out = np.where(member == Membership.OUTSIDE, target, q)
    return rho, q_out


def project(s: State, p: ModelParams) -> State:
    """Project a single state onto the admissible set (q modified only)."""
    rho, q = project_values(s.rho, s.q, p)
    return State(float(rho[()]), float(q[()]))


def project_field(f: CellField, p: ModelParams) -> CellField:
    """Cell-wise projection of a field; phase tags are refreshed."""
    try:
        rho, q = project_values(f.rho, f.q, p)
    except ModelError as e:
        raise ModelError(f"projection failed at t={f.time!r}: {e}") from e
    phase = membership_values(rho, q, p).astype(np.int8)
    return CellField(f.grid, rho, q, phase, f.time, f.domain)
