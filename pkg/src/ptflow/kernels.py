"""Compiled per-interface pipeline: reconstruction, projection, and the
central-upwind flux in one pass.

This mirrors, operation for operation, the reference implementations in
``reconstruction``, ``projection``, ``model`` and ``flux`` (which stay the
tested source of truth); the kernel exists purely for speed on large grids.
Results are independent of how the interface range is split across workers:
every interface is computed by the same scalar operation sequence.
"""

from __future__ import annotations

from numba import njit

from .model import EPS_MEM, EPS_RHO
from .projection import RHO_DUST
from .reconstruction import CONGESTED_SMOOTH, EPS_CHAR, FREE_SMOOTH, \
    THETA_SMOOTH, THETA_TRANSITION

# flux.py's relative guard on the degenerate speed denominator
from .flux import EPS_SPEED_REL

PHASE_FREE = 0
PHASE_CONGESTED = 1
OUTSIDE = 2


@njit(cache=True, nogil=True)
def _mm3(a, b, c):
    lo = min(min(a, b), c)
    hi = max(max(a, b), c)
    if lo > 0.0:
        return lo
    if hi < 0.0:
        return hi
    return 0.0


@njit(cache=True, nogil=True)
def _mm2(a, b):
    if a > 0.0 and b > 0.0:
        return min(a, b)
    if a < 0.0 and b < 0.0:
        return max(a, b)
    return 0.0


@njit(cache=True, nogil=True)
def _edge(prev, mid, nxt, theta):
    dm = mid - prev
    dp = nxt - mid
    return 0.5 * _mm3(theta * dm, 0.5 * (dm + dp), theta * dp)


@njit(cache=True, nogil=True)
def _free_q(rho, v_max, rho_max):
    return v_max * rho * rho_max / max(rho_max - rho, EPS_RHO)


@njit(cache=True, nogil=True)
def _speed_cap(rho, v_cong, rho_max):
    return rho * rho_max * v_cong / max(rho_max - rho, EPS_RHO)


@njit(cache=True, nogil=True)
def _membership(rho, qv, v_max, v_cong, rho_max, q_eq, rho_cf, q_hi, q_lo,
                rho_cc):
    if rho <= rho_cf and abs(qv - _free_q(rho, v_max, rho_max)) <= EPS_MEM:
        return PHASE_FREE
    upper = q_eq + (q_hi - q_eq) / rho_max * rho
    if rho < rho_cc:
        upper = min(upper, _speed_cap(rho, v_cong, rho_max))
    lower = q_eq + (q_lo - q_eq) / rho_max * rho
    if (rho >= rho_cf - EPS_MEM and rho <= rho_max
            and qv >= lower - EPS_MEM and qv <= upper + EPS_MEM):
        return PHASE_CONGESTED
    return OUTSIDE


@njit(cache=True, nogil=True)
def _project(rho, qv, v_max, v_cong, rho_max, q_eq, rho_cf, q_hi, q_lo,
             rho_cc):
    # Returns (ok, rho, q); ok = False when rho is beyond round-off dust.
    dust = RHO_DUST * rho_max
    if rho < -dust or rho > rho_max + dust:
        return False, rho, qv
    if rho < 0.0:
        rho = 0.0
    elif rho > rho_max:
        rho = rho_max
    if _membership(rho, qv, v_max, v_cong, rho_max, q_eq, rho_cf, q_hi, q_lo,
                   rho_cc) != OUTSIDE:
        return True, rho, qv
    if rho <= rho_cf:
        return True, rho, _free_q(rho, v_max, rho_max)
    lower = q_eq + (q_lo - q_eq) / rho_max * rho
    if qv < lower:
        return True, rho, lower
    if rho <= rho_cc:
        return True, rho, _speed_cap(rho, v_cong, rho_max)
    return True, rho, q_eq + (q_hi - q_eq) / rho_max * rho


@njit(cache=True, nogil=True)
def _lam1(rho, qv, rho_max, q_eq):
    r = max(rho, EPS_RHO)
    return (qv - q_eq) * (1.0 / r - 2.0 / rho_max) - q_eq / rho_max


@njit(cache=True, nogil=True)
def _cong_speed(rho, qv, rho_max):
    r = max(rho, EPS_RHO)
    return (1.0 - r / rho_max) * qv / r


@njit(cache=True, nogil=True)
def cu_interface_fluxes(rho, q, ph, tags, lo, hi, base,
                        v_max, v_cong, rho_max, q_eq, rho_cf, q_hi, q_lo,
                        rho_cc,
                        f_rho, f_q, rm_o, qm_o, rp_o, qp_o, pm_o, pp_o):
    """Interface values and CU fluxes for extended-interface indices
    [lo, hi); outputs land at index i - base.  Returns (amax, err) where
    err >= 0 flags an unprojectable density at that output index."""
    amax = 0.0
    for i in range(lo, hi):
        rm1, r0, r1, r2 = rho[i - 1], rho[i], rho[i + 1], rho[i + 2]
        qm1, q0, q1, q2 = q[i - 1], q[i], q[i + 1], q[i + 2]
        tl, tr = tags[i], tags[i + 1]

        # characteristic decomposition shared by both sides of the interface
        char_ok = False
        r11 = r12 = i11 = i12 = i21 = i22 = 0.0
        if tl == CONGESTED_SMOOTH or tr == CONGESTED_SMOOTH:
            if (ph[i - 1] == PHASE_CONGESTED and ph[i] == PHASE_CONGESTED
                    and ph[i + 1] == PHASE_CONGESTED
                    and ph[i + 2] == PHASE_CONGESTED):
                rho_hat = 0.5 * (r0 + r1)
                q_hat = 0.5 * (q0 + q1)
                if abs(q_hat - q_eq) >= EPS_CHAR and rho_hat >= EPS_RHO:
                    char_ok = True
                    dq = q_hat - q_eq
                    r11 = rho_hat / dq
                    r12 = rho_hat * (rho_max - rho_hat) / (q_hat * rho_max)
                    den = q_hat * rho_hat + q_eq * (rho_max - rho_hat)
                    i11 = q_hat * dq * rho_max / (rho_hat * den)
                    i12 = dq * (rho_hat - rho_max) / den
                    i21 = -i11
                    i22 = q_hat * rho_max / den

        # minus side (right edge of cell i)
        if tl == FREE_SMOOTH:
            rm = r0 + _edge(rm1, r0, r1, THETA_SMOOTH)
            qm = _free_q(rm, v_max, rho_max)
        elif tl == CONGESTED_SMOOTH and char_ok:
            g1a = i11 * rm1 + i12 * qm1
            g2a = i21 * rm1 + i22 * qm1
            g1b = i11 * r0 + i12 * q0
            g2b = i21 * r0 + i22 * q0
            g1c = i11 * r1 + i12 * q1
            g2c = i21 * r1 + i22 * q1
            g1 = g1b + _edge(g1a, g1b, g1c, THETA_SMOOTH)
            g2 = g2b + _edge(g2a, g2b, g2c, THETA_SMOOTH)
            rm = r11 * g1 + r12 * g2
            qm = g1 + g2
        else:
            rm = r0 + _edge(rm1, r0, r1, THETA_TRANSITION)
            qm = q0 + _edge(qm1, q0, q1, THETA_TRANSITION)

        # plus side (left edge of cell i+1)
        if tr == FREE_SMOOTH:
            rp = r1 - _edge(r0, r1, r2, THETA_SMOOTH)
            qp = _free_q(rp, v_max, rho_max)
        elif tr == CONGESTED_SMOOTH and char_ok:
            g1a = i11 * r0 + i12 * q0
            g2a = i21 * r0 + i22 * q0
            g1b = i11 * r1 + i12 * q1
            g2b = i21 * r1 + i22 * q1
            g1c = i11 * r2 + i12 * q2
            g2c = i21 * r2 + i22 * q2
            g1 = g1b - _edge(g1a, g1b, g1c, THETA_SMOOTH)
            g2 = g2b - _edge(g2a, g2b, g2c, THETA_SMOOTH)
            rp = r11 * g1 + r12 * g2
            qp = g1 + g2
        else:
            rp = r1 - _edge(r0, r1, r2, THETA_TRANSITION)
            qp = q1 - _edge(q0, q1, q2, THETA_TRANSITION)

        k = i - base
        ok, rm, qm = _project(rm, qm, v_max, v_cong, rho_max, q_eq, rho_cf,
                              q_hi, q_lo, rho_cc)
        if not ok:
            return amax, k
        ok, rp, qp = _project(rp, qp, v_max, v_cong, rho_max, q_eq, rho_cf,
                              q_hi, q_lo, rho_cc)
        if not ok:
            return amax, k
        pm = _membership(rm, qm, v_max, v_cong, rho_max, q_eq, rho_cf, q_hi,
                         q_lo, rho_cc)
        pp = _membership(rp, qp, v_max, v_cong, rho_max, q_eq, rho_cf, q_hi,
                         q_lo, rho_cc)
        rm_o[k], qm_o[k], rp_o[k], qp_o[k] = rm, qm, rp, qp
        pm_o[k], pp_o[k] = pm, pp

        # one-sided local speeds by phase pair
        if pm == PHASE_CONGESTED and pp == PHASE_CONGESTED:
            a_plus = max(max(_cong_speed(rm, qm, rho_max),
                             _cong_speed(rp, qp, rho_max)), 0.0)
            a_minus = min(min(_lam1(rm, qm, rho_max, q_eq),
                              _lam1(rp, qp, rho_max, q_eq)), 0.0)
        elif pm == PHASE_FREE and pp == PHASE_FREE:
            a_plus = v_max
            a_minus = 0.0
        elif pm == PHASE_CONGESTED:
            a_plus = v_max
            a_minus = min(_lam1(rm, qm, rho_max, q_eq), 0.0)
        else:
            a_plus = v_max
            a_minus = min(_lam1(rp, qp, rho_max, q_eq), 0.0)
        if a_plus > amax:
            amax = a_plus
        if -a_minus > amax:
            amax = -a_minus

        # physical fluxes of each side in its own phase
        if pm == PHASE_FREE:
            frm = rm * v_max
            fqm = qm * v_max
        else:
            v = _cong_speed(rm, qm, rho_max)
            frm = rm * v
            fqm = (qm - q_eq) * v
        if pp == PHASE_FREE:
            frp = rp * v_max
            fqp = qp * v_max
        else:
            v = _cong_speed(rp, qp, rho_max)
            frp = rp * v
            fqp = (qp - q_eq) * v

        den = a_plus - a_minus
        if den <= EPS_SPEED_REL * v_max:
            f_rho[k] = 0.5 * (frm + frp)
            f_q[k] = 0.5 * (fqm + fqp)
        elif a_minus == 0.0:
            f_rho[k] = frm
            f_q[k] = fqm
        elif a_plus == 0.0:
            f_rho[k] = frp
            f_q[k] = fqp
        else:
            star_r = (a_plus * rp - a_minus * rm - (frp - frm)) / den
            star_q = (a_plus * qp - a_minus * qm - (fqp - fqm)) / den
            corr_r = rp - rm - _mm2(rp - star_r, star_r - rm)
            corr_q = qp - qm - _mm2(qp - star_q, star_q - qm)
            spread = a_plus * a_minus / den
            f_rho[k] = (a_plus * frm - a_minus * frp) / den + spread * corr_r
            f_q[k] = (a_plus * fqm - a_minus * fqp) / den + spread * corr_q
    return amax, -1


def pipeline_range(ext_rho, ext_q, ext_phase, tags_ext, p, lo, hi, base,
                   outputs):
    """Python-side wrapper unpacking the model parameters for the kernel."""
    f_rho, f_q, rm, qm, rp, qp, pm, pp = outputs
    return cu_interface_fluxes(
        ext_rho, ext_q, ext_phase, tags_ext, lo, hi, base,
        p.v_max, p.v_cong_max, p.rho_max, p.q_eq, p.rho_crit_free, p.q_max,
        p.q_min, p.rho_crit_cong,
        f_rho, f_q, rm, qm, rp, qp, pm, pp)
