"""Locality comparison: growth in E minus A versus the pulled-back growth in E*."""

from __future__ import annotations

import logging
import math
import time

import numpy as np
from scipy.stats import ks_2samp

from ..batch import HullTarget, sample_exits
from ..canonical import canonical_map
from ..domain import Hull, StandardDomain
from ..errors import InsufficientPaths
from .report import Check, ExperimentReport

log = logging.getLogger(__name__)


def locality_experiment(E: StandardDomain, A: Hull | None, kappa: float, paths: int, seed: int,
                        rho: float, dt: float = 2e-3, n_min: int = 200, alpha: float = 0.01,
                        delta: float = 0.02, K: int = 16, group: int = 500) -> ExperimentReport:
    """Two-sample KS comparison of exit angles on |z| = rho.

    Sample 1 runs in E and sample 2 in E* = Phi_A(E minus A), read back through
    Phi_A^{-1}.  Both are restricted to the event that the trace reaches
    |z| = rho before coming within `delta` of A (or of the circle arc it
    would swallow).  The check passes when KS does not reject at level alpha;
    callers expecting rejection inspect `extras["reject"]`.
    """
    t0 = time.perf_counter()
    M = E.moduli
    if A is None or A.empty:
        hull, Mstar, x_star, back, marks = None, M, 0.0, None, None
    else:
        angle, r_tip = A.radial_params()
        if r_tip <= rho:
            raise ValueError("hull must stay outside the stopping circle")
        hull = HullTarget(angle % (2 * math.pi), r_tip)
        cm = canonical_map(M, A)
        Mstar = cm.target_moduli()
        x_star = float(cm.regular(np.array([1 + 0j]))[0].imag)
        # images of the two sides of the hull base bound the obstacle arc in E*
        tiny = 1e-9
        ends = angle + np.array([-tiny, tiny])
        img = ends + cm.regular(np.exp(1j * ends)).imag
        near = x_star + (img[0] - x_star) % (2 * math.pi)
        far = near + (img[1] - near) % (2 * math.pi)
        marks = (near, far)

        def back(w, z0):
            return cm.inverse(w, z0)

    common = dict(rho=rho, dt=dt, hull=hull, K=K, group=group, delta_hull=delta, delta_circle=delta)
    s1 = sample_exits(M, 0.0, kappa, paths, seed, start=0, **common)
    common["hull"] = None
    s2 = sample_exits(Mstar, x_star, kappa, paths, seed, start=paths, to_domain=back, marks=marks,
                      **common)
    a1, a2 = s1.survivors, s2.survivors
    counts = {"E": int(a1.size), "E_star": int(a2.size)}
    log.info("locality kappa=%g survivors %s", kappa, counts)
    if min(a1.size, a2.size) < n_min:
        raise InsufficientPaths(f"insufficient surviving paths: {counts} < {n_min}")
    res = ks_2samp(a1, a2)
    params = {"moduli": M.to_dict(), "hull": None if A is None else A.to_dict(), "kappa": kappa,
              "paths": paths, "seed": seed, "rho": rho, "dt": dt, "delta": delta, "alpha": alpha,
              "n_min": n_min}
    checks = [Check.at_least("ks_pvalue", res.pvalue, alpha, "DERIVED: two-sample KS, no rejection expected")]
    statuses = {k: {s: int(np.sum(x.status == s)) for s in ("exit", "hit", "horizon", "collision")}
                for k, x in (("E", s1), ("E_star", s2))}
    extras = {"ks_statistic": float(res.statistic), "pvalue": float(res.pvalue),
              "reject": bool(res.pvalue < alpha), "survivors": counts, "status": statuses,
              "start_angle_star": x_star, "moduli_star": Mstar.to_dict()}
    return ExperimentReport("locality", params, checks, time.perf_counter() - t0, extras,
                            {"angles_E": a1, "angles_E_star": a2})
