"""Piecewise-linear reconstruction of interface point values.

Cell averages are turned into one-sided interface values with a generalized
minmod limiter.  The limiting strategy depends on where a cell sits:

  * free cells away from phase interfaces: limit rho only (sharper
    theta = 1.5) and slave q to the free-flow curve;
  * congested cells away from phase interfaces: limit the local
    characteristic variables (theta = 1.5), falling back to componentwise
    limiting when the local decomposition is ill-conditioned;
  * a six-cell transition zone around every detected phase interface
    (three cells on each side): componentwise limiting with the
    conservative theta = 1.0.

Every emitted point value is projected back onto the admissible set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ExtendedField, N_GHOST
from .model import (
    EPS_RHO,
    Membership,
    ModelError,
    ModelParams,
    State,
    classify,
)

# Domain tags.
FREE_SMOOTH = 1      # free flow, away from phase interfaces
CONGESTED_SMOOTH = 2  # congested flow, away from phase interfaces
TRANSITION = 3       # six-cell zone around a phase interface

# Limiter sharpness per domain.
THETA_SMOOTH = 1.5
THETA_TRANSITION = 1.0

# Below this |q_hat - q_eq| the eigenvector matrix of the local
# characteristic decomposition is near-singular; fall back to the
# conservative componentwise limiter.
EPS_CHAR = 1e-8


@dataclass
class InterfaceValues:
    """One-sided point values at every interface of the physical grid.

    Index k refers to the interface between physical cells k-1 and k
    (k = 0 and k = n_cells are the boundary faces)."""

    rho_minus: np.ndarray
    q_minus: np.ndarray
    rho_plus: np.ndarray
    q_plus: np.ndarray
    phase_minus: np.ndarray  # int8, Phase values
    phase_plus: np.ndarray


def minmod(values) -> float:
    """Minmod of a non-empty sequence: min if all positive, max if all
    negative, zero otherwise."""
    vals = list(values)
    if not vals:
        raise ModelError("minmod of an empty sequence")
    if all(v > 0 for v in vals):
        return min(vals)
    if all(v < 0 for v in vals):
        return max(vals)
    return 0.0


def minmod_slope(psi_prev: float, psi_mid: float, psi_next: float,
                 dx: float, theta: float) -> float:
    """Generalized minmod slope of three consecutive cell averages."""
    if dx <= 0.0:
        raise ModelError("dx must be positive")
    if not 1.0 <= theta <= 2.0:
        raise ModelError("theta must be in [1, 2]")
    return minmod((theta * (psi_mid - psi_prev) / dx,
                   (psi_next - psi_prev) / (2.0 * dx),
                   theta * (psi_next - psi_mid) / dx))


def detect_interfaces(rho_bar: np.ndarray, p: ModelParams) -> np.ndarray:
    """Indices J such that the critical free density is crossed (or touched)
    between cells J and J+1."""
    rho_bar = np.asarray(rho_bar, dtype=float)
    if rho_bar.size < 2:
        raise ModelError("interface detection needs at least 2 cells")
    d = rho_bar - p.rho_crit_free
    return np.flatnonzero(d[:-1] * d[1:] <= 0.0)


def tag_domains(rho_bar: np.ndarray, interfaces: np.ndarray,
                p: ModelParams) -> np.ndarray:
    """Per-cell domain tags; transition zones are truncated at the grid ends."""
    rho_bar = np.asarray(rho_bar, dtype=float)
    tags = np.where(rho_bar <= p.rho_crit_free,
                    np.int8(FREE_SMOOTH), np.int8(CONGESTED_SMOOTH))
    for j in np.asarray(interfaces, dtype=int):
        tags[max(j - 2, 0):j + 4] = TRANSITION
    return tags


def extend_tags(tags: np.ndarray) -> np.ndarray:
    """Ghost cells inherit the adjacent edge cell's tag."""
    return np.concatenate([np.repeat(tags[:1], N_GHOST), tags,
                           np.repeat(tags[-1:], N_GHOST)])


# -- componentwise limiting, vectorised ---------------------------------------

def _minmod3(a, b, c):
    lo = np.minimum(np.minimum(a, b), c)
    hi = np.maximum(np.maximum(a, b), c)
    return np.where(lo > 0.0, lo, np.where(hi < 0.0, hi, 0.0))


def _edge_offset(prev, mid, nxt, theta):
    # Half of (dx * limited slope); dx cancels against the slope's 1/dx.
    dm = mid - prev
    dp = nxt - mid
    return 0.5 * _minmod3(theta * dm, 0.5 * (dm + dp), theta * dp)


# -- local characteristic decomposition ----------------------------------------

def _char_matrices(rho_hat, q_hat, p: ModelParams):
    """Eigenvector matrix R of the congested flux Jacobian at (rho_hat, q_hat)
    and its closed-form inverse, as entry arrays ((r11, r12), inverse rows)."""
    dq = q_hat - p.q_eq
    r11 = rho_hat / dq
    r12 = rho_hat * (p.rho_max - rho_hat) / (q_hat * p.rho_max)
    den = q_hat * rho_hat + p.q_eq * (p.rho_max - rho_hat)
    i11 = q_hat * dq * p.rho_max / (rho_hat * den)
    i12 = dq * (rho_hat - p.rho_max) / den
    i21 = -i11
    i22 = q_hat * p.rho_max / den
    return r11, r12, i11, i12, i21, i22


def characteristic_reconstruct(stencil, p: ModelParams,
                               theta: float = THETA_SMOOTH):
    """Interface values from limiting in local characteristic variables.

    ``stencil`` holds the four cell-average states around one interface
    (two on each side).  Returns (minus_state, plus_state), or None when the
    decomposition is ill-conditioned or any stencil state is not congested,
    in which case the caller should fall back to componentwise limiting.
    The returned values are raw; projection happens downstream.
    """
    states = [s if isinstance(s, State) else State(*s) for s in stencil]
    if len(states) != 4:
        raise ModelError("characteristic stencil needs exactly 4 cells")
    if any(classify(s, p) != Membership.CONGESTED_REGION for s in states):
        return None
    rho_hat = 0.5 * (states[1].rho + states[2].rho)
    q_hat = 0.5 * (states[1].q + states[2].q)
    if abs(q_hat - p.q_eq) < EPS_CHAR or rho_hat < EPS_RHO:
        return None
    r11, r12, i11, i12, i21, i22 = _char_matrices(rho_hat, q_hat, p)
    g1 = [i11 * s.rho + i12 * s.q for s in states]
    g2 = [i21 * s.rho + i22 * s.q for s in states]
    off1_m = _edge_offset(g1[0], g1[1], g1[2], theta)
    off2_m = _edge_offset(g2[0], g2[1], g2[2], theta)
    off1_p = _edge_offset(g1[1], g1[2], g1[3], theta)
    off2_p = _edge_offset(g2[1], g2[2], g2[3], theta)
    gm = (g1[1] + off1_m, g2[1] + off2_m)
    gp = (g1[2] - off1_p, g2[2] - off2_p)
    minus = State(r11 * gm[0] + r12 * gm[1], gm[0] + gm[1])
    plus = State(r11 * gp[0] + r12 * gp[1], gp[0] + gp[1])
    return minus, plus


# -- full reconstruction over an extended field ---------------------------------

def reconstruct(ext: ExtendedField, tags_ext: np.ndarray,
                p: ModelParams) -> InterfaceValues:
    """Interface values at the n_cells + 1 faces of the physical grid."""
    from .kernels import pipeline_range

    n = ext.grid.n_cells
    m = n + 1
    outputs = (np.empty(m), np.empty(m), np.empty(m), np.empty(m),
               np.empty(m), np.empty(m), np.empty(m, dtype=np.int8),
               np.empty(m, dtype=np.int8))
    lo = N_GHOST - 1
    _, err = pipeline_range(ext.rho, ext.q, ext.phase, tags_ext, p,
                            lo, lo + m, lo, outputs)
    if err >= 0:
        raise ModelError(f"reconstructed density at interface {err} is "
                         f"outside [0, rho_max]")
    _, _, rm, qm, rp, qp, pm, pp = outputs
    return InterfaceValues(rm, qm, rp, qp, pm, pp)
