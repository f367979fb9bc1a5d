"""Acceptance criteria 1-11, each at its stated tolerance and runtime budget.

Every test prints one line "PASS criterion N ..." or "FAIL criterion N ..."
(visible with -s or in the terminal summary via capsys.disabled).
"""

import time

import pytest

from kllab.cli import run
from kllab.verification.suites import (closed_form_suite, dcn_suite, hadamard_suite, locality_suite,
                                       minus_three_phi_suite, normalization_suite, oracles_suite,
                                       parametrization_suite, periods_suite, stopping_suite)


def _judge(capsys, number, title, report, budget):
    ok = report.passed and report.wall_clock < budget
    detail = "; ".join(f"{c.name}={c.measured:.6g}" for c in report.checks)
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}; "
              f"{report.wall_clock:.2f} s (budget {budget:g} s)")
    for c in report.checks:
        assert c.passed, f"{c.name}: measured {c.measured!r} vs {c.reference!r} (tol {c.tolerance!r})"
    assert report.wall_clock < budget


def test_criterion_01_disk_reduction(capsys):
    _judge(capsys, 1, "n=1 closed-form reduction", closed_form_suite(points=50, T=1.0), 1.0)


def test_criterion_02_normalization(capsys):
    _judge(capsys, 2, "normalization", normalization_suite(count=100), 60.0)


def test_criterion_03_parametrization(capsys):
    _judge(capsys, 3, "capacity parametrization", parametrization_suite(T=0.5), 60.0)


def test_criterion_04_periods(capsys):
    _judge(capsys, 4, "period matrix", periods_suite(count=50), 120.0)


def test_criterion_05_domain_constant(capsys):
    _judge(capsys, 5, "domain-constant identity", dcn_suite(count=50), 120.0)


def test_criterion_06_oracles(capsys):
    _judge(capsys, 6, "oracle agreement", oracles_suite(walks=100_000), 300.0)


def test_criterion_07_hadamard(capsys):
    _judge(capsys, 7, "increment ratio", hadamard_suite(), 300.0)


def test_criterion_08_minus_three_phi(capsys):
    _judge(capsys, 8, "-3 phi'' identity", minus_three_phi_suite(), 10.0)


@pytest.mark.slow
def test_criterion_09_locality(capsys):
    _judge(capsys, 9, "locality", locality_suite(paths=2000), 1800.0)


def test_criterion_10_reproducibility(capsys, tmp_path):
    t0 = time.perf_counter()
    args = ["simulate", "--kappa", "6", "--paths", "10", "--seed", "1"]
    codes = [run(args + ["--out", str(tmp_path / d)]) for d in ("a", "b")]
    files = [{p.name: p.read_bytes() for p in sorted((tmp_path / d).iterdir())} for d in ("a", "b")]
    ok = codes == [0, 0] and files[0] == files[1] and len(files[0]) > 1
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion 10 (reproducibility): {len(files[0])} artifacts "
              f"byte-identical={files[0] == files[1]}; {time.perf_counter() - t0:.2f} s")
    assert codes == [0, 0]
    assert files[0] == files[1]


@pytest.mark.slow
def test_criterion_11_stopping(capsys):
    _judge(capsys, 11, "stopping semantics", stopping_suite(), 60.0)
