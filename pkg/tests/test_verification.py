import json
import math

import numpy as np
import pytest

from kllab import DISK, Hull, Moduli, StandardDomain, build_domain_functions, canonical_map
from kllab.errors import InsufficientPaths, IncrementUnderflow
from kllab.verification import (Check, ExperimentReport, brownian_harmonic_measure, fd_laplace_oracle,
                                hadamard_ratio_experiment, locality_experiment, minus_three_phi_identity,
                                radial_loewner_closed_form)
from kllab.verification.closed_form import (implicit_residual, radial_slit_map_derivative_sq,
                                            slit_tip_radius)
from kllab.verification.fd import fd_harmonic_measures, fd_period_matrix
from kllab.verification.identities import EXP, IDENTITY, POLE, boundary_angle_map


# closed form ------------------------------------------------------------

def test_closed_form_trivial_cases():
    assert radial_loewner_closed_form(0.0, 0.3 + 0.2j) == 0.3 + 0.2j
    assert radial_loewner_closed_form(0.7, 0j) == 0


def test_closed_form_residual():
    g = radial_loewner_closed_form(0.1, -0.5 + 0j)
    assert implicit_residual(0.1, -0.5, g) <= 1e-12
    assert abs(g) < 1


def test_tip_radius_and_derivative():
    r = slit_tip_radius(0.4)
    assert (1 + r) ** 2 / (4 * r) == pytest.approx(math.exp(0.4), rel=1e-14)
    assert radial_slit_map_derivative_sq(0.3) == pytest.approx(4 * 0.7 / 1.7 ** 2, rel=1e-14)


# grid oracle -----------------------------------------------------------

def _disk_regular_error(nr, nphi, w=0.3 - 0.2j):
    sol = fd_laplace_oracle(StandardDomain(DISK), lambda z, k: np.log(np.abs(z - w)), nr, nphi)
    z = np.array([0.5 + 0.1j, -0.2 + 0.6j, -0.7 - 0.1j])
    return float(np.max(np.abs(sol.at(z) - np.log(np.abs(1 - np.conj(w) * z)))))


def test_fd_disk_second_order():
    e1, e2 = _disk_regular_error(64, 256), _disk_regular_error(128, 512)
    assert e1 <= 1e-3
    assert 3.0 <= e1 / e2 <= 5.5


def test_fd_minimum_resolution():
    with pytest.raises(ValueError):
        fd_laplace_oracle(StandardDomain(DISK), lambda z, k: 0 * z.real, 32, 256)


def test_fd_harmonic_measure_matches_collocation(n2):
    D = StandardDomain(n2)
    om = fd_harmonic_measures(D, 64, 256)[0]
    z = np.array([0j, 0.3 - 0.3j, -0.6 + 0.2j])
    ref = build_domain_functions(n2).harmonic_measure(z)[:, 0]
    assert np.max(np.abs(om.at(z) - ref)) <= 1e-2
    assert fd_period_matrix(D).shape == (1, 1)


# random walks ----------------------------------------------------------

def test_walks_disk_empty():
    hf = brownian_harmonic_measure(StandardDomain(DISK), 0.2j, 1000, seed=1)
    assert hf.slits.shape == (0,)
    assert hf.frequencies.sum() == 1.0


def test_walks_sum_to_one_and_reproducible(n2):
    D = StandardDomain(n2)
    a = brownian_harmonic_measure(D, 0j, 20000, seed=3)
    b = brownian_harmonic_measure(D, 0j, 20000, seed=3)
    assert a.frequencies.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.array_equal(a.counts, b.counts)
    om = build_domain_functions(n2).harmonic_measure(np.array([0j]))[0, 0]
    assert abs(a.slits[0] - om) <= 4 * a.standard_errors[1]


# hadamard --------------------------------------------------------------

def test_hadamard_empty_hull_is_one():
    rep = hadamard_ratio_experiment(StandardDomain(DISK), None, 0.0, [1e-1, 1e-2])
    assert rep.extras["ratio_r"] == [1.0, 1.0]
    assert rep.passed


def test_hadamard_disk_slit():
    rep = hadamard_ratio_experiment(StandardDomain(DISK), Hull.radial_slit(math.pi, 0.3), 0.0,
                                    [1e-2, 3e-3, 1e-3], reference=radial_slit_map_derivative_sq(0.3))
    assert rep.check("ratio_r").passed and rep.check("ratio_d").passed
    assert rep.extras["limit_from_map"] == pytest.approx(radial_slit_map_derivative_sq(0.3), rel=1e-6)


def test_hadamard_underflow():
    with pytest.raises(IncrementUnderflow):
        hadamard_ratio_experiment(StandardDomain(DISK), None, 0.0, [1e-9])


# -3 phi'' identity -----------------------------------------------------

@pytest.mark.parametrize("phi,expected", [(IDENTITY, 0.0), (EXP, -3.0), (POLE, -0.75)])
def test_minus_three_phi_examples(phi, expected):
    rep = minus_three_phi_identity(phi, 0.0)
    assert rep.passed
    assert rep.extras["limit"][0] == pytest.approx(expected, abs=1e-6)


def test_minus_three_phi_canonical():
    cm = canonical_map(Moduli((0.5,), (1.0,), (3.0,)), Hull.radial_slit(4.0, 0.3), tol=1e-12)
    rep = minus_three_phi_identity(boundary_angle_map(cm), 0.5, tol=1e-5)
    assert rep.passed and abs(rep.extras["reference"][0]) > 1e-3


def test_minus_three_phi_needs_nonzero_derivative():
    flat = IDENTITY.__class__("flat", lambda z: z ** 2, lambda z: 2 * z, lambda z: 2 + 0 * z)
    with pytest.raises(ValueError):
        minus_three_phi_identity(flat, 0.0)


# locality --------------------------------------------------------------

def test_locality_empty_hull_does_not_reject():
    rep = locality_experiment(StandardDomain(DISK), None, 6.0, 400, 2, 0.5, dt=4e-3)
    assert not rep.extras["reject"]
    assert rep.extras["survivors"] == {"E": 400, "E_star": 400}


def test_locality_insufficient_paths():
    with pytest.raises(InsufficientPaths):
        locality_experiment(StandardDomain(DISK), Hull.radial_slit(0.6, 0.45), 6.0, 50, 1, 0.5, dt=4e-3)


def test_locality_rejects_hull_inside_circle():
    with pytest.raises(ValueError):
        locality_experiment(StandardDomain(DISK), Hull.radial_slit(0.6, 0.7), 6.0, 400, 1, 0.5)


# reports ---------------------------------------------------------------

def test_report_json_roundtrip():
    rep = ExperimentReport("x", {"a": 1}, [Check.close("c", 1.0, 1.0 + 1e-9, 1e-6, "TRIVIAL: test")], 0.1,
                           {"v": np.array([1.0, 2.0])})
    d = json.loads(rep.to_json())
    assert d["passed"] is True and d["extras"]["v"] == [1.0, 2.0]
    assert "PASS" in rep.summary_line() or "pass" in rep.summary_line().lower()
    assert not Check.at_most("m", 2.0, 1.0, "TRIVIAL").passed
    assert Check.at_least("m", 2.0, 1.0, "TRIVIAL").passed
