import numpy as np
import pytest

from ptflow.model import (
    Membership,
    ModelParams,
    membership_values,
    q_lower_line,
    q_speed_cap,
    q_upper_line,
    _free_q,
)
from ptflow.scenarios import builtin_scenarios
from ptflow.stepper import run


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def catalog():
    return builtin_scenarios()


def random_congested(rng, p, n):
    """States drawn uniformly from the congested region's q band."""
    rho = rng.uniform(p.rho_crit_free * 1.01, p.rho_max * 0.999, n)
    lo = q_lower_line(rho, p)
    hi = np.where(rho < p.rho_crit_cong,
                  np.minimum(q_upper_line(rho, p), q_speed_cap(rho, p)),
                  q_upper_line(rho, p))
    q = lo + rng.uniform(0.0, 1.0, n) * (hi - lo)
    return rho, q


def random_admissible(rng, p, n, free_fraction=0.5):
    """A mix of free-curve and congested states."""
    free = rng.uniform(0.0, 1.0, n) < free_fraction
    rho = np.empty(n)
    q = np.empty(n)
    rho[free] = rng.uniform(0.0, p.rho_crit_free, int(free.sum()))
    q[free] = _free_q(rho[free], p)
    rho_c, q_c = random_congested(rng, p, int((~free).sum()))
    rho[~free] = rho_c
    q[~free] = q_c
    return rho, q


class AdmissibilityRecorder:
    """Stage callback recording the worst admissible-set violation."""

    def __init__(self, p):
        self.p = p
        self.outside_cells = 0
        self.stages = 0

    def __call__(self, stage, t, field):
        self.stages += 1
        m = membership_values(field.rho, field.q, self.p)
        self.outside_cells += int(np.sum(m == Membership.OUTSIDE))


@pytest.fixture(scope="session")
def riemann_runs(catalog):
    """All twelve Riemann tests at the default grid, with wall time and
    per-stage admissibility audit."""
    import time

    results = {}
    for n in range(1, 13):
        name = f"test{n}"
        sc = catalog[name]
        rec = AdmissibilityRecorder(sc.params)
        t0 = time.perf_counter()
        out = run(sc, stage_callback=rec)
        elapsed = time.perf_counter() - t0
        results[name] = (out, elapsed, rec)
    return results
