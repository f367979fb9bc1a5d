"""Command-line entry point: simulate, trace, field, verify, validate.

Every command writes its artifacts plus manifest.json into --out.  Artifacts
contain no timestamps or timings (those go to the log), so repeated runs with
the same parameters are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .domain import Moduli, StandardDomain, validate_moduli
from .errors import KllabError
from .loewner import ChainConfig, run_chain, trace, write_trace_csv

log = logging.getLogger("kllab")

DEFAULTS = {"kappa": 6.0, "T": 0.5, "dt": 0.01, "seed": 0, "paths": 1, "jobs": 1, "tol": 1e-8,
            "out": "kllab-out", "driver": "const:0", "grid": 64, "quantity": "psi", "w": "0,0"}


@dataclass
class RunConfig:
    """Parameters of one command after merging defaults, --config JSON and flags."""

    command: str
    moduli: Moduli = field(default_factory=Moduli)
    moduli_file: str | None = None
    kappa: float = 6.0
    T: float = 0.5
    dt: float = 0.01
    seed: int = 0
    paths: int = 1
    jobs: int = 1
    tol: float = 1e-8
    out: Path = Path("kllab-out")
    driver: str = "const:0"
    suite: str | None = None
    grid: int = 64
    quantity: str = "psi"
    w: complex = 0j

    def echo(self) -> dict:
        return {"command": self.command, "moduli": self.moduli.to_dict(), "moduli_file": self.moduli_file,
                "kappa": self.kappa, "T": self.T, "dt": self.dt, "seed": self.seed, "paths": self.paths,
                "jobs": self.jobs, "tol": self.tol, "driver": self.driver, "suite": self.suite,
                "grid": self.grid, "quantity": self.quantity, "w": [self.w.real, self.w.imag]}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kllab", description="Radial Komatu-Loewner laboratory.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *names):
        sp.add_argument("--config", help="JSON file of parameters; flags override it")
        sp.add_argument("--out", help=f"output directory (default {DEFAULTS['out']})")
        sp.add_argument("--moduli", help="moduli JSON file {m, theta, theta_prime} (default: the disk)")
        sp.add_argument("--tol", type=float, help=f"collocation tolerance (default {DEFAULTS['tol']})")
        for name in names:
            if name == "kappa":
                sp.add_argument("--kappa", type=float, help=f"diffusivity (default {DEFAULTS['kappa']})")
            elif name == "T":
                sp.add_argument("--T", type=float, help=f"horizon (default {DEFAULTS['T']})")
            elif name == "dt":
                sp.add_argument("--dt", type=float, help=f"time step (default {DEFAULTS['dt']})")
            elif name == "seed":
                sp.add_argument("--seed", type=int, help=f"master seed (default {DEFAULTS['seed']})")
            elif name == "paths":
                sp.add_argument("--paths", type=int, help=f"number of paths (default {DEFAULTS['paths']})")
            elif name == "jobs":
                sp.add_argument("--jobs", type=int, help=f"worker processes (default {DEFAULTS['jobs']})")
            elif name == "driver":
                sp.add_argument("--driver", help="const:x or sle (default const:0)")

    common(sub.add_parser("simulate", help="Schiffer-diffusion path batches"),
           "kappa", "T", "dt", "seed", "paths", "jobs")
    common(sub.add_parser("trace", help="chain and trace for a driver"), "driver", "kappa", "T", "dt", "seed")
    fp = sub.add_parser("field", help="grid dump of Psi, G or omega")
    common(fp, "driver")
    fp.add_argument("--quantity", choices=["psi", "green", "omega"], help="default psi")
    fp.add_argument("--grid", type=int, help="grid points per axis (default 64)")
    fp.add_argument("--w", help="pole of G as 're,im' (default 0,0)")
    from .verification.suites import SUITES
    vp = sub.add_parser("verify", help="run a named verification suite")
    common(vp, "seed")
    vp.add_argument("--suite", required=True, choices=sorted(SUITES) + ["all"])
    common(sub.add_parser("validate", help="check a moduli file"))
    return p


def _parse_driver(s: str) -> tuple[str, float]:
    if s == "sle":
        return "sle", 0.0
    if s.startswith("const:"):
        return "const", float(s.split(":", 1)[1])
    raise ValueError(f"driver must be const:x or sle, got {s!r}")


def resolve(args: argparse.Namespace) -> RunConfig:
    """Defaults < --config JSON < flags."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(json.loads(Path(args.config).read_text()))
    for k, v in vars(args).items():
        if v is not None and k not in ("config",):
            merged[k] = v
    mod = merged.get("moduli")
    if isinstance(mod, dict):
        M, mfile = Moduli.from_dict(mod), None
    elif mod:
        M, mfile = Moduli.load(mod), str(mod)
    else:
        M, mfile = Moduli(), None
    wr, wi = (float(v) for v in str(merged["w"]).split(","))
    cfg = RunConfig(args.command, M, mfile, float(merged["kappa"]), float(merged["T"]), float(merged["dt"]),
                    int(merged["seed"]), int(merged["paths"]), int(merged["jobs"]), float(merged["tol"]),
                    Path(merged["out"]), str(merged["driver"]), merged.get("suite"), int(merged["grid"]),
                    str(merged["quantity"]), complex(wr, wi))
    if cfg.command != "validate":
        M.checked()
        _parse_driver(cfg.driver)
        if cfg.dt <= 0 or cfg.T <= 0 or cfg.kappa < 0 or cfg.paths < 1 or cfg.jobs < 1 or cfg.grid < 2:
            raise ValueError("need dt > 0, T > 0, kappa >= 0, paths >= 1, jobs >= 1, grid >= 2")
    return cfg


def _versions() -> dict:
    import numba
    import scipy
    return {"kllab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def write_manifest(cfg: RunConfig, artifacts: list[str], extra: dict | None = None) -> None:
    data = {"versions": _versions(), "parameters": cfg.echo(), "seeds": {"master": cfg.seed},
            "artifacts": sorted(artifacts)}
    if extra:
        data.update(extra)
    (cfg.out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def cmd_simulate(cfg: RunConfig) -> int:
    from .sle import SdeConfig, run_batch, summary
    sde = SdeConfig(cfg.kappa, cfg.T, cfg.dt, cfg.seed, cfg.moduli, chain=ChainConfig(tol=cfg.tol, step_tol=None))
    paths = run_batch(sde, cfg.paths, 0, cfg.jobs)
    ns = cfg.moduli.nslits
    with open(cfg.out / "paths.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "t", "theta"] + [f"m_{j}" for j in range(1, ns + 1)]
                   + [f"theta_{j}" for j in range(1, ns + 1)] + [f"theta_prime_{j}" for j in range(1, ns + 1)])
        for p in paths:
            c = p.chain
            for t, th, M in zip(c.t_grid, c.theta_path, c.moduli_path):
                w.writerow([p.index, _fmt(t), _fmt(th)] + [_fmt(v) for v in M.m + M.theta + M.theta_prime])
    artifacts = ["paths.csv", "summary.json"]
    for p in paths:
        stem = f"path-{p.index:06d}"
        p.chain.to_jsonl(cfg.out / f"{stem}.jsonl")
        samples = trace(p.chain, strict=False)
        write_trace_csv(samples, cfg.out / f"{stem}-trace.csv")
        artifacts += [f"{stem}.jsonl", f"{stem}-trace.csv"]
    summ = summary(paths)
    (cfg.out / "summary.json").write_text(json.dumps(summ, indent=2, sort_keys=True) + "\n")
    write_manifest(cfg, artifacts,
                   {"seeds": {"master": cfg.seed, "streams": "Philox(SeedSequence([seed, path]))",
                              "paths": list(range(cfg.paths))}})
    return 0


def cmd_trace(cfg: RunConfig) -> int:
    kind, x = _parse_driver(cfg.driver)
    chain_cfg = ChainConfig(tol=cfg.tol)
    if kind == "const":
        chain = run_chain(cfg.moduli, x, cfg.T, cfg.dt, chain_cfg)
    else:
        from .sle import SdeConfig, run_sle
        chain = run_sle(SdeConfig(cfg.kappa, cfg.T, cfg.dt, cfg.seed, cfg.moduli,
                                  chain=ChainConfig(tol=cfg.tol, step_tol=None))).chain
    samples = trace(chain)
    write_trace_csv(samples, cfg.out / "trace.csv")
    chain.to_jsonl(cfg.out / "chain.jsonl")
    write_manifest(cfg, ["trace.csv", "chain.jsonl"], {"stop_reason": chain.stop_reason,
                                                       "max_roundtrip_residual": max(s.roundtrip_residual for s in samples)})
    return 0


def cmd_field(cfg: RunConfig) -> int:
    from .kernel import build_domain_functions, solve_psi
    D = StandardDomain(cfg.moduli)
    ax = np.linspace(-1, 1, cfg.grid)
    X, Y = np.meshgrid(ax, ax)
    Z = (X + 1j * Y).ravel()
    keep = D.contains(Z, guard=1e-3)
    if cfg.quantity == "psi":
        _, x = _parse_driver(cfg.driver)
        psi = solve_psi(cfg.moduli, x, tol=cfg.tol)
        keep &= np.abs(Z - np.exp(1j * x)) > 1e-3
        vals = psi(Z[keep])
        header, cols = ["x", "y", "re_psi", "im_psi"], [vals.real, vals.imag]
    else:
        fns = build_domain_functions(cfg.moduli, tol=cfg.tol)
        if cfg.quantity == "green":
            keep &= np.abs(Z - cfg.w) > 1e-3
            header, cols = ["x", "y", "green"], [fns.green(Z[keep], cfg.w)]
        else:
            om = fns.harmonic_measure(Z[keep]).reshape(-1, cfg.moduli.nslits)
            header = ["x", "y"] + [f"omega_{j}" for j in range(1, cfg.moduli.nslits + 1)]
            cols = [om[:, j] for j in range(cfg.moduli.nslits)]
    with open(cfg.out / "field.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(Z[keep].real, Z[keep].imag, *cols):
            w.writerow([_fmt(float(v)) for v in row])
    write_manifest(cfg, ["field.csv"])
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    from .verification.suites import SUITES
    names = sorted(SUITES) if cfg.suite == "all" else [cfg.suite]
    ok = True
    artifacts = []
    for name in names:
        t0 = time.perf_counter()
        rep = SUITES[name]()
        log.info("suite %s finished in %.2f s", name, time.perf_counter() - t0)
        fname = f"report-{name}.json"
        (cfg.out / fname).write_text(rep.to_json() + "\n")
        artifacts.append(fname)
        for key, arr in rep.samples.items():
            sname = f"samples-{name}-{key}.csv"
            np.savetxt(cfg.out / sname, np.asarray(arr, dtype=float), fmt="%.16e", header=key, comments="")
            artifacts.append(sname)
        print(rep.summary_line())
        ok &= rep.passed
    write_manifest(cfg, artifacts)
    if not ok:
        print("verification failed", file=sys.stderr)
    return 0 if ok else 1


def cmd_validate(cfg: RunConfig) -> int:
    problems = validate_moduli(cfg.moduli)
    report = {"valid": not problems, "violations": problems, "moduli": cfg.moduli.to_dict()}
    (cfg.out / "validation.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_manifest(cfg, ["validation.json"])
    if problems:
        for msg in problems:
            print(f"violation: {msg}")
        return 1
    print("valid")
    return 0


COMMANDS = {"simulate": cmd_simulate, "trace": cmd_trace, "field": cmd_field, "verify": cmd_verify,
            "validate": cmd_validate}


def run(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("KLLAB_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = resolve(args)
        cfg.out.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[cfg.command](cfg)
    except (KllabError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
