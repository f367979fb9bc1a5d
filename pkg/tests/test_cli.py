import csv
import json

import pytest

from kllab.cli import build_parser, resolve, run


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_validate_bad_moduli(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"m": [1.2], "theta": [0.0], "theta_prime": [1.0]}))
    code = run(["validate", "--moduli", str(bad), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "m_1 not in (0,1)" in capsys.readouterr().out
    report = json.loads((tmp_path / "o" / "validation.json").read_text())
    assert report["valid"] is False


def test_validate_good_moduli(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"m": [0.5], "theta": [0.0], "theta_prime": [1.5707963267948966]}))
    assert run(["validate", "--moduli", str(good), "--out", str(tmp_path / "o")]) == 0


def test_trace_disk(tmp_path):
    disk = tmp_path / "disk.json"
    disk.write_text(json.dumps({"m": [], "theta": [], "theta_prime": []}))
    out = tmp_path / "o"
    assert run(["trace", "--moduli", str(disk), "--driver", "const:0", "--T", "0.5", "--out", str(out)]) == 0
    with open(out / "trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 51
    assert max(float(r["residual"]) for r in rows) <= 1e-5
    assert max(abs(float(r["gamma_im"])) for r in rows) <= 1e-12
    gamma_re = [float(r["gamma_re"]) for r in rows]
    assert all(a > b for a, b in zip(gamma_re, gamma_re[1:]))
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["artifacts"]) == {"trace.csv", "chain.jsonl"}
    assert manifest["parameters"]["driver"] == "const:0"


def test_simulate_byte_identical(tmp_path):
    args = ["simulate", "--kappa", "6", "--paths", "10", "--seed", "1", "--T", "0.1"]
    assert run(args + ["--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a == b
    assert "paths.csv" in a and "path-000009.jsonl" in a and "path-000009-trace.csv" in a
    manifest = json.loads(a["manifest.json"])
    assert sorted(manifest["artifacts"]) == sorted(k for k in a if k != "manifest.json")


def test_simulate_seed_changes_output(tmp_path):
    args = ["simulate", "--kappa", "6", "--paths", "2", "--T", "0.05"]
    run(args + ["--seed", "1", "--out", str(tmp_path / "a")])
    run(args + ["--seed", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "paths.csv").read_bytes() != (tmp_path / "b" / "paths.csv").read_bytes()


def test_field_psi(tmp_path):
    out = tmp_path / "o"
    assert run(["field", "--quantity", "psi", "--grid", "9", "--out", str(out)]) == 0
    with open(out / "field.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and set(rows[0]) == {"x", "y", "re_psi", "im_psi"}


def test_verify_suite(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["verify", "--suite", "parametrization", "--out", str(out)]) == 0
    rep = json.loads((out / "report-parametrization.json").read_text())
    assert rep["passed"] is True


def test_parse_error_exit_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["bogus"])
    assert exc.value.code == 2


def test_invalid_parameter_exit_code(tmp_path):
    assert run(["simulate", "--kappa", "-1", "--out", str(tmp_path / "o")]) == 1


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kappa": 2.0, "T": 0.3, "seed": 4}))
    args = build_parser().parse_args(["simulate", "--config", str(cfg), "--kappa", "3"])
    rc = resolve(args)
    assert rc.kappa == 3.0 and rc.T == 0.3 and rc.seed == 4 and rc.dt == 0.01
