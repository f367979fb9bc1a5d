import math

import numpy as np
import pytest

from kllab import (DISK, ChainConfig, LoewnerChain, Moduli, advance_chain, flow_point, increment_check,
                   moduli_rhs, run_chain, trace, trace_point)
from kllab.errors import TraceUnresolved
from kllab.verification.closed_form import implicit_residual, slit_tip_radius
from kllab.verification.suites import derivative_at_origin


@pytest.fixture(scope="module")
def disk_chain():
    return run_chain(DISK, 0.0, 0.5, 0.01)


@pytest.fixture(scope="module")
def n2_chain():
    return run_chain(Moduli((0.5,), (1.0,), (3.0,)), 4.5, 0.3, 0.02)


def test_rhs_disk_empty():
    assert moduli_rhs(DISK, 0.3).shape == (0,)


def test_rhs_outward_drift(n2):
    rhs = moduli_rhs(n2, math.pi)
    assert rhs.shape == (3,) and rhs[0] > 0


def test_rhs_reflection_symmetry(symmetric):
    rhs = moduli_rhs(symmetric, math.pi)
    assert rhs[1] == pytest.approx(-rhs[2], abs=1e-8)


def test_dt_zero_is_identity(n2):
    chain = LoewnerChain.start(n2)
    assert advance_chain(chain, 0.0, 0.0) is chain


def test_disk_moduli_unchanged(disk_chain):
    assert all(M == DISK for M in disk_chain.moduli_path)
    assert disk_chain.stop_reason == "horizon"


def test_radius_nondecreasing():
    chain = run_chain(Moduli((0.5,), (0.0,), (math.pi / 2,)), 0.0, 0.4, 0.02)
    m = np.array([M.m[0] for M in chain.moduli_path])
    assert np.all(np.diff(m) >= 0)


def test_origin_fixed(n2_chain):
    fr = flow_point(n2_chain, 0j)
    assert np.all(fr.values == 0) and fr.t_hit == math.inf


def test_closed_form_along_flow(disk_chain):
    # constant driver at 1 has the relation g/(1+g)^2 = e^t z/(1+z)^2
    for z in (0.3 + 0.4j, -0.5 + 0.1j, 0.1 - 0.7j):
        fr = flow_point(disk_chain, z)
        worst = max(implicit_residual(t, z, g, xi=1.0) for t, g in zip(fr.times, fr.values))
        assert worst <= 1e-6


def test_capacity_parametrization(disk_chain, n2_chain):
    for chain in (disk_chain, n2_chain):
        assert derivative_at_origin(chain) / math.exp(chain.t) == pytest.approx(1.0, abs=1e-4)
        assert chain.log_derivative[-1] == pytest.approx(chain.t, abs=1e-8)


def test_trace_starts_at_driver(disk_chain):
    assert trace_point(disk_chain, 0.0).gamma == pytest.approx(1.0)


def test_disk_trace_is_radial_slit(disk_chain):
    samples = trace(disk_chain)
    g = np.array([s.gamma for s in samples])
    assert np.max(np.abs(g.imag)) <= 1e-12
    assert np.all(np.diff(g.real) < 0)
    for s in samples[1:]:
        assert s.gamma.real == pytest.approx(slit_tip_radius(s.t), abs=1e-8)
        assert s.roundtrip_residual <= 1e-5


def test_n2_trace_roundtrip(n2_chain):
    assert max(s.roundtrip_residual for s in trace(n2_chain)) <= 1e-5


def test_trace_off_grid_rejected(disk_chain):
    with pytest.raises(ValueError):
        trace_point(disk_chain, 0.005)


def test_trace_strictness():
    chain = run_chain(DISK, 0.0, 0.1, 0.05, ChainConfig(trace_tol=0.0))
    with pytest.raises(TraceUnresolved):
        [trace_point(chain, t) for t in chain.t_grid]
    assert len(trace(chain, strict=False)) == 3


def test_increment_check(disk_chain, n2_chain):
    assert increment_check(disk_chain, 0.2, 0.2) == 0.0
    assert abs(increment_check(disk_chain, 0.1, 0.2)) <= 1e-4
    assert abs(increment_check(n2_chain, 0.1, 0.26)) <= 1e-3


def test_semigroup_local_error():
    M, x = Moduli((0.5,), (1.0,), (3.0,)), 4.5
    cfg = ChainConfig(step_tol=None)
    gaps = []
    for h in (0.04, 0.02):
        one = advance_chain(LoewnerChain.start(M, x, cfg), x, 2 * h).moduli.as_array()
        two = advance_chain(advance_chain(LoewnerChain.start(M, x, cfg), x, h), x, h).moduli.as_array()
        gaps.append(float(np.max(np.abs(one - two))))
    # fourth-order steps: the local discrepancy falls by about 2^5
    assert gaps[1] <= gaps[0] / 16


def test_determinism():
    a = run_chain(Moduli((0.5,), (1.0,), (3.0,)), lambda t: 4.5 + math.sin(3 * t), 0.1, 0.02)
    b = run_chain(Moduli((0.5,), (1.0,), (3.0,)), lambda t: 4.5 + math.sin(3 * t), 0.1, 0.02)
    assert a.theta_path == b.theta_path and a.moduli_path == b.moduli_path


def test_jsonl(tmp_path, n2_chain):
    p = tmp_path / "c.jsonl"
    n2_chain.to_jsonl(p)
    lines = p.read_text().splitlines()
    assert len(lines) == len(n2_chain.t_grid)


@pytest.mark.slow
def test_collision_stops():
    cfg = ChainConfig()
    chain = run_chain(Moduli((0.5,), (0.0,), (2.0,)), 1.0, 1.0, 0.025, cfg)
    assert chain.stop_reason == "slit-collision"
    assert 1 - 2 * cfg.eps_stop <= max(chain.moduli.m) < 1
    with pytest.raises(ValueError):
        advance_chain(chain, 1.0, 0.01)
