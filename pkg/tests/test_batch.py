import math

import numpy as np
import pytest

from kllab import DISK, Moduli, solve_psi
from kllab.batch import HullTarget, batched_psi, sample_exits
from kllab.loewner import moduli_rhs

CASES = [(Moduli((0.5,), (1.0,), (3.0,)), 4.5),
         (Moduli((0.75,), (2.5,), (4.0,)), 0.3),
         (Moduli((0.4, 0.75), (0.2, 3.0), (2.0, 5.0)), 5.9)]


@pytest.mark.parametrize("M,x", CASES)
def test_batched_field_matches_serial(M, x):
    arr = lambda v: np.array([v, v])
    bp = batched_psi(arr(M.m), arr(M.theta), arr(M.theta_prime), np.array([x, x]), K=24)
    ref = solve_psi(M, x, fallback=False)
    assert np.allclose(bp.const[0], ref.slit_constants, atol=1e-7)
    assert bp.drift()[0] == pytest.approx(ref.drift()[0], abs=1e-7)
    rates = bp.moduli_rates(arr(M.m), arr(M.theta), arr(M.theta_prime))[0]
    assert np.allclose(rates, moduli_rhs(M, x), atol=1e-6)
    w = np.array([[0.1 + 0.2j, -0.3 + 0.1j]] * 2)
    assert np.allclose(bp.regular(w)[0], ref.regular(w[0]), atol=1e-7)


def test_disk_deterministic_exit():
    # kappa = 0: the trace is the radial slit towards 0 and reaches |z| = rho when (1+rho)^2/(4 rho) = e^t
    rho, dt = 0.5, 1e-3
    s = sample_exits(DISK, 0.0, 0.0, 4, 0, rho, dt, keep_traces=True)
    assert np.all(s.status == "exit")
    assert np.allclose(s.angle, 0.0, atol=1e-12)
    assert np.allclose(s.t_exit, math.log((1 + rho) ** 2 / (4 * rho)), atol=dt)


def test_sampler_reproducible_and_group_independent():
    a = sample_exits(DISK, 0.0, 6.0, 40, 3, 0.5, 4e-3, group=40)
    b = sample_exits(DISK, 0.0, 6.0, 40, 3, 0.5, 4e-3, group=7)
    assert np.array_equal(a.angle, b.angle) and np.array_equal(a.status, b.status)


def test_hull_discards():
    hull = HullTarget(0.6, 0.55)
    s = sample_exits(DISK, 0.0, 6.0, 200, 1, 0.5, 4e-3, hull=hull)
    assert set(np.unique(s.status)) <= {"exit", "hit", "horizon", "collision"}
    assert 0 < np.sum(s.status == "hit") < 200
    assert s.survivors.size == np.sum(s.status == "exit")
