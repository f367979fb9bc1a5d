"""Variation of conformal radius and domain constant under small boundary hulls."""

from __future__ import annotations

import math
import time

import numpy as np

from ..canonical import canonical_map
from ..domain import Hull, StandardDomain
from ..errors import IncrementUnderflow
from ..kernel import build_domain_functions
from .report import Check, ExperimentReport


def _radius_and_constant(M, hulls, tol, K, max_order):
    """(r, d) at 0 for E minus hulls: r = ln Phi'(0), d = r + omega^T P^-1 omega of the image."""
    cm = canonical_map(M, hulls or None, tol=tol, K=K, max_order=max_order)
    r = cm.conformal_radius
    target = cm.target_moduli() if hulls else M
    if target.nslits == 0:
        return r, r, cm.residual
    fns = build_domain_functions(target, tol=tol, K=K, max_order=max_order)
    om = fns.omega_at_origin
    return r, r + float(om @ np.linalg.solve(fns.period_matrix, om)), cm.residual


def green_normal_derivative(M, x: float, tol: float = 1e-12) -> float:
    """Outward normal derivative of G(., 0) at e^{ix}: -1 + sum_k ln(m_k) d omega_k/dn."""
    if M.nslits == 0:
        return -1.0
    fns = build_domain_functions(M, tol=tol)
    dn = fns.omega_normal_derivative(np.array([np.exp(1j * x)]))[0]
    return float(-1.0 + np.log(np.asarray(M.m)) @ dn)


def hadamard_ratio_experiment(E: StandardDomain, A: Hull | None, x: float, eps_list,
                              tol: float = 1e-12, K: int = 24, max_order: int = 320,
                              reference: float | None = None, rtol: float = 0.05,
                              cauchy_tol: float = 0.10, provenance: str | None = None) -> ExperimentReport:
    """Ratio of increments caused by a radial slit B_eps at e^{ix}, in E minus A versus in E.

    The increments are r(E - A - B) - r(E - A) and r(E - B) - r(E), all computed
    as conformal radii at 0 in the coordinates of E; the limit as eps -> 0 is
    |Phi_A'(e^{ix})|^2.  The domain-constant ratio has the limit
    |Phi_A'|^2 (dG_{E*}(Phi_A(xi), 0)/dn / dG_E(xi, 0)/dn)^2.
    """
    t0 = time.perf_counter()
    M = E.moduli
    eps_list = [float(e) for e in eps_list]
    has_A = A is not None and not A.empty
    base = [A] if has_A else []
    rE, dE, _ = _radius_and_constant(M, [], tol, K, max_order)
    rA, dA, _ = _radius_and_constant(M, base, tol, K, max_order) if has_A else (rE, dE, 0.0)
    if has_A:
        cmA = canonical_map(M, A, tol=tol, K=K, max_order=max_order)
        xi = np.exp(1j * x)
        limit = float(abs(cmA.derivative(np.array([xi]))[0]) ** 2)
        x_star = x + float(cmA.regular(np.array([xi]))[0].imag)
        gE = green_normal_derivative(M, x, tol)
        gS = green_normal_derivative(cmA.target_moduli(), x_star, tol)
        limit_d = limit * (gS / gE) ** 2
    else:
        limit = limit_d = 1.0
    ratios_r, ratios_d, incs = [], [], []
    for eps in eps_list:
        B = Hull.radial_slit(x, eps)
        rB, dB, res = _radius_and_constant(M, [B], tol, K, max_order)
        dr_E = rB - rE
        floor = 100 * max(res, tol)
        if abs(dr_E) < floor:
            raise IncrementUnderflow(f"increment {dr_E:.3e} below solver accuracy {floor:.1e} at eps={eps:g}")
        if has_A:
            rAB, dAB, _ = _radius_and_constant(M, base + [B], tol, K, max_order)
            dr_A, dd_A = rAB - rA, dAB - dA
        else:
            dr_A, dd_A = dr_E, dB - dE
        incs.append((dr_E, dr_A))
        ratios_r.append(dr_A / dr_E)
        ratios_d.append(dd_A / (dB - dE))
    ref = limit if reference is None else float(reference)
    prov = provenance or ("TRIVIAL: identity map" if not has_A else "DERIVED: |Phi_A'(xi)|^2 from the canonical map")
    checks = [Check.close("ratio_r", ratios_r[-1], ref, rtol, prov, relative=True),
              Check.close("ratio_d", ratios_d[-1], limit_d, rtol,
                          "DERIVED: |Phi_A'|^2 times squared ratio of Green normal derivatives", relative=True)]
    devs = [abs(a - b) / abs(b) for a, b in zip(ratios_r[:-1], ratios_r[1:])]
    if devs:
        checks.append(Check.at_most("cauchy_deviation", max(devs), cauchy_tol,
                                    "DERIVED: successive-eps convergence trend"))
    params = {"moduli": M.to_dict(), "hull": A.to_dict() if has_A else None, "x": x, "eps": eps_list,
              "tol": tol}
    extras = {"ratio_r": ratios_r, "ratio_d": ratios_d, "increments": incs, "limit_from_map": limit, "limit_d": limit_d,
              "successive_deviation": devs}
    return ExperimentReport("hadamard_ratio", params, checks, time.perf_counter() - t0, extras)
