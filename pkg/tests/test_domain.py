import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kllab import DISK, Hull, Moduli, StandardDomain, random_moduli, validate_moduli
from kllab.domain import NO_SLIT, min_slit_gap, wrap_angle
from kllab.errors import DomainError


def test_disk_is_valid():
    assert validate_moduli(DISK) == []
    assert DISK.n == 1 and DISK.nslits == 0


def test_single_arc_is_valid(n2):
    assert validate_moduli(n2) == []


def test_radius_out_of_range_reported():
    v = validate_moduli(Moduli((1.2,), (0.0,), (1.0,)))
    assert v == ["m_1 not in (0,1)"]


def test_angle_order_reported():
    v = validate_moduli(Moduli((0.5,), (1.0,), (0.5,)))
    assert len(v) == 1 and "theta_1" in v[0]


def test_intersecting_slits_reported():
    M = Moduli((0.5, 0.5), (0.0, 1.0), (2.0, 3.0))
    assert validate_moduli(M) == ["slits 1 and 2 intersect"]


def test_validate_idempotent_and_order_independent():
    M = Moduli((0.5, 0.5, 1.3), (0.0, 1.0, 0.0), (2.0, 3.0, 1.0))
    swapped = Moduli(M.m[::-1], M.theta[::-1], M.theta_prime[::-1])
    assert validate_moduli(M) == validate_moduli(M)
    assert len(validate_moduli(M)) == len(validate_moduli(swapped))


def test_checked_raises():
    with pytest.raises(DomainError):
        Moduli((1.2,), (0.0,), (1.0,)).checked()


def test_min_slit_gap_examples():
    assert min_slit_gap(DISK, 1.3) == NO_SLIT == math.inf
    assert min_slit_gap(Moduli((0.5,), (0.0,), (math.pi / 2,)), 0.0) == pytest.approx(0.5, abs=1e-14)
    assert min_slit_gap(Moduli((0.5,), (math.pi / 2,), (math.pi,)), 0.0) == pytest.approx(math.sqrt(1.25), abs=1e-14)


def test_json_roundtrip(tmp_path, n2):
    p = tmp_path / "m.json"
    p.write_text(n2.dumps())
    assert Moduli.load(p) == n2
    assert Moduli.from_dict(n2.to_dict()) == n2


def test_array_roundtrip(n2):
    assert Moduli.from_array(n2.as_array()) == n2


def test_random_moduli_valid():
    rng = np.random.default_rng(3)
    for n in (1, 2, 3, 4):
        M = random_moduli(rng, n, min_gap=0.05)
        assert M.n == n and validate_moduli(M) == []


def test_wrap_angle():
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi) or wrap_angle(3 * math.pi) == pytest.approx(-math.pi)


def test_domain_contains(n2):
    D = StandardDomain(n2)
    assert D.contains(np.array([0j]))[0]
    assert not D.contains(np.array([1.5 + 0j]))[0]


def test_radial_hull():
    A = Hull.radial_slit(math.pi, 0.3)
    assert not A.empty
    angle, r_tip = A.radial_params()
    assert angle == pytest.approx(math.pi) and r_tip == pytest.approx(0.7)
    assert A.distance(np.array([-0.5 + 0j]))[0] == pytest.approx(0.2)
    assert Hull.from_dict(A.to_dict()).radial_params() == pytest.approx((angle, r_tip))


finite = st.floats(-10, 10, allow_nan=False)
slit = st.tuples(st.floats(-0.5, 1.5, allow_nan=False), finite, finite)


@settings(max_examples=200, deadline=None)
@given(st.lists(slit, max_size=4), st.randoms(use_true_random=False))
def test_validate_properties(slits, rnd):
    M = Moduli(*(tuple(v) for v in zip(*slits))) if slits else Moduli()
    shuffled = list(slits)
    rnd.shuffle(shuffled)
    S = Moduli(*(tuple(v) for v in zip(*shuffled))) if shuffled else Moduli()
    v = validate_moduli(M)
    assert v == validate_moduli(M)
    assert bool(v) == bool(validate_moduli(S))
    if any(not 0 < m < 1 for m, _, _ in slits):
        assert v
