import math

import numpy as np
import pytest

from kllab import (DISK, Moduli, build_domain_functions, conformal_radius, domain_constant,
                   drift_coefficient, green, harmonic_measure, period_matrix, psi_field, solve_psi)
from kllab.canonical import conformal_radius_at
from kllab.kernel import _psi_collocation
from kllab.errors import ConvergenceError, PoleCollisionError, PoleProximityError

# Reference values from independent oracles, frozen here.
# Finite-volume grid solve at 64x256 and 128x512, first-order Richardson extrapolation:
FD_GREEN_N2 = {0.8 + 0j: 0.04776601, -0.3 + 0.4j: 0.45499891}   # pole w = 0
FD_OMEGA_N2 = {0j: 0.47386065, 0.3 - 0.3j: 0.34869888}
FD_PERIOD_N2 = 0.68362169
# Walk on spheres, 1e6 walks from z = 0 (seed 7): frequency and binomial standard error.
WOS_OMEGA_N2_ORIGIN = (0.473552, 0.0004993)


@pytest.fixture(scope="module")
def fns_n2():
    return build_domain_functions(Moduli((0.5,), (0.0,), (math.pi / 2,)))


@pytest.fixture(scope="module")
def fns_disk():
    return build_domain_functions(DISK)


def test_disk_green_values(fns_disk):
    assert green(fns_disk, np.array([0.5 + 0j]), 0j)[0] == pytest.approx(math.log(2), abs=1e-14)
    z, w = 0.5j, 0.5
    ref = -math.log(abs(z - w)) + math.log(abs(1 - np.conj(z) * w))
    assert green(fns_disk, np.array([z]), w)[0] == pytest.approx(ref, abs=1e-14)


def test_disk_degenerate_outputs(fns_disk):
    assert harmonic_measure(fns_disk, np.array([0.3j])).shape == (1, 0)
    assert period_matrix(fns_disk).shape == (0, 0)
    assert drift_coefficient(fns_disk, 1.234) == 0.0
    assert conformal_radius(fns_disk, 0j) == 0.0
    assert domain_constant(fns_disk, 0j) == 0.0
    assert conformal_radius(fns_disk, 0.5) == pytest.approx(math.log(4 / 3), abs=1e-14)
    # n = 1: domain constant equals conformal radius
    for w in (0.5, 0.3 - 0.2j):
        assert domain_constant(fns_disk, w) == pytest.approx(conformal_radius(fns_disk, w), abs=1e-14)


def test_disk_psi_values():
    psi = solve_psi(DISK, 0.0)
    assert complex(psi(1j)) == pytest.approx(1j, abs=1e-14)
    assert complex(psi(-1 + 0j)) == pytest.approx(0, abs=1e-14)
    assert complex(psi(0j)) == pytest.approx(1, abs=1e-14)


def test_psi_pole_guard():
    with pytest.raises(PoleProximityError):
        solve_psi(DISK, 0.0)(1 - 1e-8 + 0j)


def test_green_pole_collision(fns_n2):
    with pytest.raises(PoleCollisionError):
        fns_n2.green(np.array([0.1 + 0j]), 0.1)


def test_n2_build_converges(fns_n2):
    assert fns_n2.collocation_residual <= 1e-8
    assert fns_n2.truncation_order > 0


def test_n2_green_against_fd(fns_n2):
    for z, ref in FD_GREEN_N2.items():
        assert abs(fns_n2.green(np.array([z]), 0j)[0] - ref) / ref <= 1e-3


def test_n2_harmonic_measure_against_fd(fns_n2):
    for z, ref in FD_OMEGA_N2.items():
        assert fns_n2.harmonic_measure(np.array([z]))[0, 0] == pytest.approx(ref, abs=1e-4)


def test_n2_harmonic_measure_against_walks(fns_n2):
    freq, se = WOS_OMEGA_N2_ORIGIN
    assert abs(fns_n2.harmonic_measure(np.array([0j]))[0, 0] - freq) <= 3 * se


def test_n2_period_against_fd(fns_n2):
    P = period_matrix(fns_n2)
    assert P.shape == (1, 1) and P[0, 0] > 0
    assert abs(P[0, 0] - FD_PERIOD_N2) / FD_PERIOD_N2 <= 1e-4


def test_harmonic_measure_tends_to_one_on_slit(fns_n2):
    # approach the midpoint of the slit from both sides
    for r in (0.5 - 1e-4, 0.5 + 1e-4):
        z = np.array([r * np.exp(1j * math.pi / 4)])
        assert fns_n2.harmonic_measure(z)[0, 0] == pytest.approx(1.0, abs=1e-3)
    assert fns_n2.harmonic_measure(np.array([0.999 * np.exp(-1j)]))[0, 0] < 0.01


def test_green_symmetry():
    rng = np.random.default_rng(5)
    fns = build_domain_functions(Moduli((0.4, 0.75), (0.2, 3.0), (2.0, 5.0)))
    for _ in range(4):
        z, w = (0.3 * complex(*rng.uniform(-1, 1, 2)) for _ in range(2))
        assert abs(fns.green(np.array([z]), w)[0] - fns.green(np.array([w]), z)[0]) <= 1e-8


def test_green_vanishes_on_boundary(fns_n2):
    zb = 0.5 * np.exp(1j * np.array([0.3, 1.0]))
    assert np.max(np.abs(fns_n2.green(zb, 0.1 + 0.2j))) <= 1e-6
    assert np.max(np.abs(fns_n2.green(np.exp(1j * np.array([2.0, 4.0])), 0.1 + 0.2j))) <= 1e-8


def test_period_matrix_spd():
    fns = build_domain_functions(Moduli((0.3, 0.55, 0.8), (0.0, 2.0, 4.0), (1.5, 3.5, 5.5)))
    assert fns.period_asymmetry <= 1e-8
    assert np.linalg.eigvalsh(fns.period_matrix).min() > 0


def test_slit_constants_two_routes(fns_n2):
    for x in (1.0, math.pi, 4.5):
        psi = psi_field(fns_n2, x)
        assert np.allclose(psi.slit_constants, fns_n2.slit_constants_from_periods(x), atol=1e-7)


def test_psi_flat_on_slit(fns_n2):
    psi = psi_field(fns_n2, math.pi)
    alpha = np.linspace(0.05, 2 * math.pi - 0.05, 41)
    vals = psi.on_slit(0, alpha)
    assert np.max(np.abs(vals.real - psi.slit_constants[0])) <= 1e-7
    assert psi.normalization_error() <= 1e-8


def test_drift_symmetric_is_zero(symmetric):
    b = drift_coefficient(build_domain_functions(symmetric), math.pi)
    assert abs(b) <= 1e-10


def test_drift_stable_under_refinement(n2):
    b1 = solve_psi(n2, 0.1, order=24).drift()[0]
    b2 = solve_psi(n2, 0.1, order=34, tol=1e-12).drift()[0]
    assert math.isfinite(b1) and abs(b1 - b2) <= 1e-6


def test_refinement_reduces_residual(n2):
    res = [_psi_collocation(n2, 2.0, K).residual for K in (8, 16, 24)]
    assert res[0] > res[1] > res[2]


def test_nearly_touching_slits_fail():
    M = Moduli((0.5, 0.5 + 1e-6), (0.0, 0.0), (2.0, 2.0))
    with pytest.raises(ConvergenceError):
        build_domain_functions(M)


def test_domain_constant_identity(fns_n2):
    om = fns_n2.omega_at_origin
    rhs = conformal_radius_at(fns_n2.domain.moduli, 0j) + float(om @ np.linalg.solve(fns_n2.period_matrix, om))
    assert abs(domain_constant(fns_n2, 0j) - rhs) <= 1e-6
