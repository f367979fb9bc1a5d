import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.stats import ks_2samp, kstest, norm

from kllab import (DISK, ChainConfig, LoewnerChain, Moduli, SdeConfig, advance_chain, moduli_rhs, run_batch,
                   run_chain, run_sle, sample_driver_step, solve_psi)
from kllab.errors import StepRejected
from kllab.sle import path_rng, summary

ASYM = Moduli((0.5,), (1.0,), (3.0,))


def test_disk_step_has_no_drift():
    assert sample_driver_step((0.3, DISK), None, 0.01, 6.0, 1.5) == pytest.approx(0.3 + math.sqrt(0.06) * 1.5)


def test_symmetric_zero_noise_step_is_fixed(symmetric):
    assert sample_driver_step((math.pi, symmetric), None, 0.01, 0.0, 0.7) == pytest.approx(math.pi, abs=1e-10)


def test_step_near_slit_rejected():
    with pytest.raises(StepRejected):
        sample_driver_step((0.5, Moduli((0.9995,), (0.0,), (1.0,))), None, 0.01, 6.0, 0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        SdeConfig(-1.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        SdeConfig(1.0, 1.0, 0.0)
    cfg = SdeConfig(2.0, 0.5, 0.01, 3, ASYM)
    assert SdeConfig.from_dict(cfg.to_dict()) == cfg


def test_path_streams_are_independent_of_batching():
    a = path_rng(5, 3).standard_normal(4)
    b = path_rng(5, 3).standard_normal(4)
    c = path_rng(5, 4).standard_normal(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    batch = run_batch(SdeConfig(6.0, 0.1, 0.01, 5), 4)
    assert batch[3].chain.theta_path == run_sle(SdeConfig(6.0, 0.1, 0.01, 5), 3).chain.theta_path


def test_fixed_seed_bit_identical():
    cfg = SdeConfig(6.0, 0.06, 0.02, 9, ASYM, 4.5)
    a, b = run_sle(cfg, 2), run_sle(cfg, 2)
    assert a.chain.theta_path == b.chain.theta_path and a.chain.moduli_path == b.chain.moduli_path
    assert np.array_equal(a.brownian_increments, b.brownian_increments)


def test_variance_matches_brownian():
    kappa, T = 6.0, 0.5
    theta = np.array([p.chain.theta for p in run_batch(SdeConfig(kappa, T, 0.01, 1), 1000)])
    assert abs(theta.var(ddof=1) / (kappa * T) - 1) <= 0.05


def test_increments_look_gaussian():
    paths = run_batch(SdeConfig(6.0, 0.5, 0.01, 2), 200)
    inc = np.concatenate([p.brownian_increments for p in paths]) / math.sqrt(0.01)
    assert abs(inc.mean()) <= 4 / math.sqrt(inc.size)
    assert kstest(inc, norm.cdf).pvalue > 0.01


def test_seed_batches_agree():
    kappa, T = 6.0, 0.5
    a = np.array([p.chain.theta for p in run_batch(SdeConfig(kappa, T, 0.01, 1), 1000)])
    b = np.array([p.chain.theta for p in run_batch(SdeConfig(kappa, T, 0.01, 2), 1000)])
    assert ks_2samp(a, b).pvalue > 0.01
    assert kstest(a, norm(scale=math.sqrt(kappa * T)).cdf).pvalue > 0.01


def test_noise_free_symmetric_equals_deterministic_chain(symmetric):
    cfg = SdeConfig(0.0, 0.1, 0.02, 0, symmetric, math.pi)
    p = run_sle(cfg)
    ref = run_chain(symmetric, math.pi, 0.1, 0.02, cfg.chain)
    assert np.allclose(p.chain.theta_path, math.pi, atol=1e-10)
    for A, B in zip(p.chain.moduli_path, ref.moduli_path):
        assert np.allclose(A.as_array(), B.as_array(), atol=1e-10)


def test_noise_free_solves_drift_ode():
    T, x0 = 0.1, 4.5

    def rhs(t, y):
        M = Moduli.from_array(y[1:])
        return np.concatenate([[solve_psi(M, y[0]).drift()[0]], moduli_rhs(M, y[0])])

    ref = solve_ivp(rhs, (0, T), np.concatenate([[x0], ASYM.as_array()]), rtol=1e-10, atol=1e-12,
                    method="DOP853").y[:, -1]
    p = run_sle(SdeConfig(0.0, T, 0.005, 0, ASYM, x0))
    assert abs(p.chain.theta - ref[0]) <= 1e-4
    assert np.max(np.abs(p.chain.moduli.as_array() - ref[1:])) <= 1e-4


def test_strong_order():
    T, kappa, fine = 0.2, 2.0, 128
    cfg = ChainConfig(step_tol=None)

    def endpoint(dW, n):
        chain, dt = LoewnerChain.start(ASYM, 4.5, cfg), T / n
        for inc in dW.reshape(n, -1).sum(axis=1):
            th1 = sample_driver_step((chain.theta, chain.moduli), None, dt, kappa, inc / math.sqrt(dt))
            chain = advance_chain(chain, th1, dt)
        return chain.theta

    rng = np.random.default_rng(11)
    levels = (4, 8, 16)
    err = np.zeros(len(levels))
    for _ in range(8):
        dW = rng.standard_normal(fine) * math.sqrt(T / fine)
        ref = endpoint(dW, fine)
        err += [abs(endpoint(dW, n) - ref) for n in levels]
    slope = np.polyfit(np.log([T / n for n in levels]), np.log(err), 1)[0]
    assert 0.2 <= slope <= 1.3


@pytest.mark.slow
def test_collision_reported():
    p = run_sle(SdeConfig(6.0, 2.0, 0.02, 1, Moduli((0.8,), (0.5,), (5.5,)), 3.0))
    assert p.stop_reason == "slit-collision"
    assert summary([p])["stop_reasons"] == {"slit-collision": 1}
