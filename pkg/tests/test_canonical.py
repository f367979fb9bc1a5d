import math

import numpy as np
import pytest

from kllab import DISK, Hull, Moduli, canonical_map, conformal_radius_at
from kllab.verification.closed_form import radial_loewner_closed_form

POINTS = np.array([0.3 + 0.2j, -0.4 + 0.5j, 0.6 - 0.1j, -0.2 - 0.6j, 0.05j])


def test_empty_hull_is_identity(n2):
    cm = canonical_map(n2, Hull(()))
    assert cm.identity
    assert np.allclose(cm(POINTS), POINTS, atol=1e-15)
    assert cm.target_moduli() == n2
    assert cm.conformal_radius == 0.0


def test_disk_radial_slit_matches_closed_form():
    s = 0.3
    cm = canonical_map(DISK, Hull.radial_slit(math.pi, s), tol=1e-12)
    t = math.log((2 - s) ** 2 / (4 * (1 - s)))  # (1+r)^2/(4r) with r = 1-s
    ref = np.array([radial_loewner_closed_form(t, z) for z in POINTS])
    assert np.max(np.abs(cm(POINTS) - ref)) <= 1e-6
    assert cm.conformal_radius == pytest.approx(t, abs=1e-8)


@pytest.mark.parametrize("M,A", [
    (DISK, Hull.radial_slit(2.0, 0.4)),
    (Moduli((0.5,), (1.0,), (3.0,)), Hull.radial_slit(4.0, 0.3)),
    (Moduli((0.4, 0.75), (0.2, 3.0), (2.0, 5.0)), Hull.radial_slit(5.8, 0.15)),
])
def test_normalization(M, A):
    cm = canonical_map(M, A, tol=1e-10)
    assert abs(complex(cm(0j))) <= 1e-12
    d = complex(cm.derivative(0j))
    assert d.real > 0 and abs(d.imag) <= 1e-10
    assert cm.conformal_radius > 0


def test_target_is_standard(n2):
    cm = canonical_map(Moduli((0.5,), (1.0,), (3.0,)), Hull.radial_slit(4.0, 0.3), tol=1e-10)
    Mstar = cm.target_moduli()
    assert Mstar.nslits == 1
    # the image of the slit is a concentric arc: |Phi| constant along it
    z = 0.5 * np.exp(1j * np.linspace(1.2, 2.8, 9))
    assert np.ptp(np.abs(cm(z))) <= 1e-7
    assert Mstar.m[0] == pytest.approx(float(np.abs(cm(z[:1]))[0]), abs=1e-7)


def test_inverse_roundtrip():
    cm = canonical_map(Moduli((0.5,), (1.0,), (3.0,)), Hull.radial_slit(4.0, 0.3), tol=1e-10)
    w = cm(POINTS)
    assert np.max(np.abs(cm.inverse(w) - POINTS)) <= 1e-10


def test_conformal_radius_disk_automorphism():
    assert conformal_radius_at(DISK, 0.5 + 0j) == pytest.approx(math.log(4 / 3), abs=1e-12)
