"""Named verification suites; each returns an ExperimentReport."""

from __future__ import annotations

import math
import time

import numpy as np

from ..canonical import canonical_map, conformal_radius_at
from ..domain import Hull, Moduli, StandardDomain, min_slit_gap, random_moduli
from ..kernel import build_domain_functions, solve_psi
from ..loewner import ChainConfig, flow_point, run_chain
from .brownian import brownian_harmonic_measure
from .closed_form import implicit_residual, radial_slit_map_derivative_sq, slit_tip_radius
from .fd import fd_green_values, fd_period_matrix, richardson_first_order
from .hadamard import hadamard_ratio_experiment
from .identities import EXP, IDENTITY, POLE, boundary_angle_map, minus_three_phi_identity
from .locality import locality_experiment
from .report import Check, ExperimentReport

N2 = Moduli((0.5,), (0.0,), (math.pi / 2,))
ORACLE_CONFIGS = (
    N2,
    Moduli((0.3,), (1.0,), (4.0,)),
    Moduli((0.7,), (2.0,), (3.5,)),
    Moduli((0.4, 0.75), (0.2, 3.0), (2.0, 5.0)),
    Moduli((0.3, 0.55, 0.8), (0.0, 2.0, 4.0), (1.5, 3.5, 5.5)),
)


def _report(name, params, checks, t0, extras=None):
    return ExperimentReport(name, params, checks, time.perf_counter() - t0, extras or {})


def closed_form_suite(points: int = 50, T: float = 1.0, dt: float = 0.005, seed: int = 0,
                      clearance: float = 0.2) -> ExperimentReport:
    """Disk chain with constant driver at pi against g/(1-g)^2 = e^t z/(1-z)^2.

    Sample points are uniform in |z| < 0.9 and at least `clearance` from the
    slit grown by time T, where the flow stays resolvable at step dt.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    tip = slit_tip_radius(T)
    z = []
    while len(z) < points:
        p = 0.9 * math.sqrt(rng.uniform()) * np.exp(1j * rng.uniform(-math.pi, math.pi))
        if abs(p - np.clip(p.real, -1.0, -tip)) >= clearance:
            z.append(p)
    chain = run_chain(Moduli(), math.pi, T, dt)
    worst = 0.0
    for zz in z:
        fr = flow_point(chain, zz)
        for t, g in zip(fr.times, fr.values):
            worst = max(worst, implicit_residual(t, zz, g))
    checks = [Check.at_most("max_relative_residual", worst, 1e-6, "DERIVED: closed-form implicit relation")]
    return _report("closed_form", {"points": points, "T": T, "dt": dt, "seed": seed, "clearance": clearance},
                   checks, t0)


def normalization_suite(count: int = 100, seed: int = 0) -> ExperimentReport:
    """|Psi(0, xi) - 1| on random configurations with n in {1, 2, 3}."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(count):
        n = 1 + i % 3
        M = random_moduli(rng, n, min_gap=0.05)
        while True:
            x = float(rng.uniform(0, 2 * math.pi))
            if n == 1 or min_slit_gap(M, x) >= 0.05:
                break
        worst = max(worst, solve_psi(M, x).normalization_error())
    checks = [Check.at_most("max_normalization_error", worst, 1e-8, "TRIVIAL: Psi(0) = 1 identity")]
    return _report("normalization", {"count": count, "seed": seed}, checks, t0)


def derivative_at_origin(chain, radius: float = 0.05, points: int = 8) -> float:
    """g_t'(0) by the mean of g(z)/z over a small circle (trapezoid rule for the Cauchy integral)."""
    z = radius * np.exp(2j * math.pi * (np.arange(points) + 0.5) / points)
    vals = [flow_point(chain, zz).values[-1] / zz for zz in z]
    return float(np.mean(vals).real)


def parametrization_suite(T: float = 0.5) -> ExperimentReport:
    """g_t'(0) e^{-t} along chains with n = 1 and n = 2."""
    t0 = time.perf_counter()
    checks = []
    for name, M, x, dt in (("n1", Moduli(), 0.0, 0.02), ("n2", Moduli((0.5,), (0.0,), (math.pi / 2,)), math.pi, 0.05)):
        chain = run_chain(M, x, T, dt)
        ratio = derivative_at_origin(chain) / math.exp(chain.t)
        checks.append(Check.close(f"{name}_ratio", ratio, 1.0, 1e-4, "TRIVIAL: capacity parametrization"))
    return _report("parametrization", {"T": T}, checks, t0)


def periods_suite(count: int = 50, seed: int = 0, nr: int = 64, nphi: int = 256) -> ExperimentReport:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    asym, min_eig = 0.0, math.inf
    for i in range(count):
        M = random_moduli(rng, 2 + i % 3, min_gap=0.05)
        fns = build_domain_functions(M)
        asym = max(asym, fns.period_asymmetry)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(fns.period_matrix).min()))
    D = StandardDomain(N2)
    P = float(build_domain_functions(N2).period_matrix[0, 0])
    coarse = float(fd_period_matrix(D, nr, nphi)[0, 0])
    fine = float(fd_period_matrix(D, 2 * nr, 2 * nphi)[0, 0])
    checks = [Check.at_most("symmetry_residual", asym, 1e-8, "TRIVIAL: reciprocity of periods"),
              Check.at_least("min_eigenvalue", min_eig, np.nextafter(0.0, 1.0), "TRIVIAL: Dirichlet form"),
              Check.close("n2_vs_fd", P, fine, 1e-2, "DERIVED: finite-volume grid solve", relative=True)]
    extras = {"fd_coarse": coarse, "fd_fine": fine, "fd_extrapolated": float(richardson_first_order(coarse, fine)),
              "collocation": P}
    return _report("periods", {"count": count, "seed": seed, "nr": nr, "nphi": nphi}, checks, t0, extras)


def dcn_suite(count: int = 50, seed: int = 0, off_origin: int = 5) -> ExperimentReport:
    """d(w) from the Green function against r(w) + omega^T P^-1 omega, at w = 0 (and a few w != 0)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, worst_w = 0.0, 0.0
    for i in range(count):
        M = random_moduli(rng, 2 + i % 2, min_gap=0.05)
        fns = build_domain_functions(M)
        om = fns.omega_at_origin
        rhs = conformal_radius_at(M, 0j) + float(om @ np.linalg.solve(fns.period_matrix, om))
        worst = max(worst, abs(fns.domain_constant(0j) - rhs))
        if i < off_origin:
            w = 0.1 * complex(*rng.uniform(-1, 1, 2))
            if float(np.min(StandardDomain(M).boundary_distance(np.array([w])))) > 0.05:
                omw = fns.harmonic_measure(np.array([w]))[0]
                rhs_w = conformal_radius_at(M, w) + float(omw @ np.linalg.solve(fns.period_matrix, omw))
                worst_w = max(worst_w, abs(fns.domain_constant(w) - rhs_w))
    checks = [Check.at_most("max_identity_residual", worst, 1e-6, "DERIVED: Green-function route vs canonical map and periods"),
              Check.at_most("max_identity_residual_off_origin", worst_w, 1e-6, "DERIVED: same identity at w != 0")]
    return _report("dcn", {"count": count, "seed": seed}, checks, t0)


def oracles_suite(walks: int = 100_000, seed: int = 0) -> ExperimentReport:
    """Harmonic measure vs walk on spheres; Green function vs the grid solve."""
    t0 = time.perf_counter()
    checks, extras = [], {"walks": {}, "green": {}}
    worst_se = 0.0
    for k, M in enumerate(ORACLE_CONFIGS):
        z = 0j if k % 2 == 0 else 0.15 + 0.1j
        fns = build_domain_functions(M)
        om = fns.harmonic_measure(np.array([z]))[0]
        hf = brownian_harmonic_measure(StandardDomain(M), z, walks, seed + k)
        se = np.maximum(hf.standard_errors[1:], 1e-12)
        dev = float(np.max(np.abs(hf.slits - om) / se))
        worst_se = max(worst_se, dev)
        extras["walks"][f"config{k}"] = {"collocation": om.tolist(), "walks": hf.slits.tolist(), "se": se.tolist()}
    checks.append(Check.at_most("max_deviation_in_se", worst_se, 3.0, "DERIVED: Monte Carlo walk on spheres"))
    worst_rel = 0.0
    cases = ((N2, np.array([0.8 + 0j, -0.3 + 0.4j, 0.2 - 0.6j]), 0j),
             (N2, np.array([0.8 + 0j, -0.6 - 0.2j]), -0.2 + 0.1j))
    for M, z, w in cases:
        fns = build_domain_functions(M)
        G = fns.green(z, w)
        ref = fd_green_values(StandardDomain(M), z, w)
        rel = float(np.max(np.abs(G - ref) / np.abs(ref)))
        worst_rel = max(worst_rel, rel)
        extras["green"][repr(complex(w))] = {"collocation": G.tolist(), "fd": ref.tolist()}
    checks.append(Check.at_most("green_max_relative", worst_rel, 1e-2, "DERIVED: finite-volume grid solve"))
    return _report("oracles", {"walks": walks, "seed": seed}, checks, t0, extras)


def hadamard_suite() -> ExperimentReport:
    t0 = time.perf_counter()
    eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
    disk = hadamard_ratio_experiment(StandardDomain(Moduli()), Hull.radial_slit(math.pi, 0.3), 0.0, eps,
                                     reference=radial_slit_map_derivative_sq(0.3),
                                     provenance="DERIVED: closed-form slit map derivative")
    n2 = hadamard_ratio_experiment(StandardDomain(Moduli((0.5,), (1.0,), (3.0,))), Hull.radial_slit(4.0, 0.3), 0.0, eps)
    checks = [disk.check("ratio_r"), disk.check("ratio_d"), n2.check("cauchy_deviation")]
    checks[0].name, checks[1].name, checks[2].name = "disk_ratio_r", "disk_ratio_d", "n2_cauchy_deviation"
    extras = {"disk": disk.extras, "n2": n2.extras}
    return _report("hadamard", {"eps": eps}, checks, t0, extras)


def minus_three_phi_suite() -> ExperimentReport:
    t0 = time.perf_counter()
    checks = []
    for phi in (IDENTITY, EXP, POLE):
        checks += minus_three_phi_identity(phi, 0.0, tol=1e-6).checks
    cm = canonical_map(Moduli((0.5,), (1.0,), (3.0,)), Hull.radial_slit(4.0, 0.3), tol=1e-12)
    checks += minus_three_phi_identity(boundary_angle_map(cm), 0.5, tol=1e-5,
                                       provenance="DERIVED: central differences on the canonical map").checks
    return _report("minus_three_phi", {}, checks, t0)


LOCALITY_CASES = {
    "disk": (Moduli(), Hull.radial_slit(0.6, 0.45)),
    "n2": (Moduli((0.75,), (2.5,), (4.0,)), Hull.radial_slit(0.6, 0.45)),
}


def locality_suite(paths: int = 2000, seed: int = 1, rho: float = 0.5, dt: float = 2e-3) -> ExperimentReport:
    """kappa = 6 must not be rejected and kappa = 2 must be, on each case."""
    t0 = time.perf_counter()
    checks, extras = [], {}
    for name, (M, A) in LOCALITY_CASES.items():
        for kappa in (6.0, 2.0):
            rep = locality_experiment(StandardDomain(M), A, kappa, paths, seed, rho, dt=dt)
            p = rep.extras["pvalue"]
            if kappa == 6.0:
                checks.append(Check.at_least(f"{name}_kappa6_pvalue", p, 0.01, "DERIVED: locality holds at kappa = 6"))
            else:
                checks.append(Check.at_most(f"{name}_kappa2_pvalue", p, 0.01, "DERIVED: locality fails for kappa != 6"))
            extras[f"{name}_kappa{kappa:g}"] = rep.extras
    return _report("locality", {"paths": paths, "seed": seed, "rho": rho, "dt": dt}, checks, t0, extras)


def stopping_suite() -> ExperimentReport:
    t0 = time.perf_counter()
    cfg = ChainConfig()
    chain = run_chain(Moduli((0.5,), (0.0,), (2.0,)), 1.0, 1.0, 0.025, cfg)
    m = max(chain.moduli.m)
    checks = [Check.close("collided", float(chain.stop_reason == "slit-collision"), 1.0, 0.0, "TRIVIAL: stop reason"),
              Check.close("final_m_window", float(1 - 2 * cfg.eps_stop <= m < 1), 1.0, 0.0, "TRIVIAL: stopping window")]
    return _report("stopping", {"eps_stop": cfg.eps_stop}, checks, t0,
                   {"final_m": m, "t": chain.t, "stop_reason": chain.stop_reason})


SUITES = {
    "closed-form": closed_form_suite,
    "normalization": normalization_suite,
    "parametrization": parametrization_suite,
    "periods": periods_suite,
    "dcn": dcn_suite,
    "oracles": oracles_suite,
    "hadamard": hadamard_suite,
    "minus-three-phi": minus_three_phi_suite,
    "locality": locality_suite,
    "stopping": stopping_suite,
}
