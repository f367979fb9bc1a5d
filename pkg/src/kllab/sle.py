"""Schiffer diffusion: Euler-Maruyama driving angle coupled to the moduli ODE.

d theta = b(theta, M) dt + sqrt(kappa) dB, with b the regular part of Psi at
the pole (the percolation drift).  Each path draws its normals from its own
counter-based stream keyed by (seed, path index), so results do not depend on
how paths are grouped or scheduled.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import Moduli, min_slit_gap
from .errors import StepCollapse, StepRejected
from .kernel import DomainFunctionSet, PsiEvaluator, solve_psi
from .loewner import ChainConfig, LoewnerChain, advance_chain

log = logging.getLogger(__name__)

NEAR_SLIT_GUARD = 1e-3


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Philox stream for one path; independent of batching."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def percolation_drift(psi: PsiEvaluator) -> float:
    return psi.drift()[0]


def zero_drift(psi: PsiEvaluator) -> float:
    return 0.0


DRIFTS: dict[str, Callable[[PsiEvaluator], float]] = {"percolation": percolation_drift, "none": zero_drift}


@dataclass(frozen=True)
class SdeConfig:
    kappa: float
    T: float
    dt: float
    seed: int = 0
    moduli: Moduli = field(default_factory=Moduli)
    theta0: float = 0.0
    dt_min: float = 1e-9
    drift: str = "percolation"
    chain: ChainConfig = field(default_factory=lambda: ChainConfig(step_tol=None))

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ValueError("kappa must be nonnegative")
        if not (self.dt > 0 and self.T > 0):
            raise ValueError("dt and T must be positive")
        if self.drift not in DRIFTS:
            raise ValueError(f"unknown drift policy {self.drift!r}")
        self.moduli.checked()

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "T": self.T, "dt": self.dt, "seed": self.seed,
                "moduli": self.moduli.to_dict(), "theta0": self.theta0, "dt_min": self.dt_min,
                "drift": self.drift}

    @classmethod
    def from_dict(cls, d: dict) -> "SdeConfig":
        return cls(float(d["kappa"]), float(d["T"]), float(d["dt"]), int(d.get("seed", 0)),
                   Moduli.from_dict(d.get("moduli", {})), float(d.get("theta0", 0.0)),
                   float(d.get("dt_min", 1e-9)), d.get("drift", "percolation"))


@dataclass(frozen=True, eq=False)
class SlePath:
    chain: LoewnerChain
    brownian_increments: np.ndarray
    drift_log: np.ndarray
    index: int = 0

    @property
    def stop_reason(self) -> str:
        return self.chain.stop_reason


def sample_driver_step(state: tuple[float, Moduli], fns, dt: float, kappa: float, normal_draw: float,
                       drift: str = "percolation", config: ChainConfig | None = None) -> float:
    """One Euler-Maruyama step of the driving angle.

    `fns` may be a DomainFunctionSet, a solved PsiEvaluator for (theta, M), or None.
    """
    theta, M = state
    if M.nslits and min_slit_gap(M, theta) < NEAR_SLIT_GUARD:
        raise StepRejected("driving point too close to a slit")
    b = _drift(theta, M, fns, drift, config or ChainConfig())
    return theta + b * dt + math.sqrt(kappa * dt) * normal_draw


def _drift(theta, M, fns, drift, cfg) -> float:
    if M.nslits == 0 or drift == "none":
        return 0.0
    if isinstance(fns, PsiEvaluator):
        psi = fns
    elif isinstance(fns, DomainFunctionSet):
        psi = fns.psi(theta)
    else:
        psi = solve_psi(M, theta, cfg.order, cfg.tol, cfg.max_order)
    return DRIFTS[drift](psi)


def run_sle(cfg: SdeConfig, index: int = 0) -> SlePath:
    """One coupled path until T or slit collision.

    Rejected steps are refined by Brownian-bridge bisection of the noise
    increment, with the extra normals taken from the same path stream.
    """
    rng = path_rng(cfg.seed, index)
    chain = LoewnerChain.start(cfg.moduli, cfg.theta0, cfg.chain)
    incs, drifts = [], []

    def attempt(chain, dt, dW, depth=0):
        if dt < cfg.dt_min:
            raise StepCollapse(f"step size fell below {cfg.dt_min:g} at t={chain.t:.6g}",
                               {"t": chain.t, "theta": chain.theta, "moduli": chain.moduli.to_dict(),
                                "path": index, "seed": cfg.seed})
        try:
            b = _drift(chain.theta, chain.moduli, None, cfg.drift, cfg.chain)
            if chain.moduli.nslits and min_slit_gap(chain.moduli, chain.theta) < NEAR_SLIT_GUARD:
                raise StepRejected("driving point too close to a slit")
            th1 = chain.theta + b * dt + math.sqrt(cfg.kappa) * dW
            new = advance_chain(chain, th1, dt)
        except StepRejected:
            half = 0.5 * dt
            w1 = 0.5 * dW + math.sqrt(dt / 4) * rng.standard_normal()
            chain = attempt(chain, half, w1, depth + 1)
            if chain.stopped:
                return chain
            return attempt(chain, half, dW - w1, depth + 1)
        incs.append(dW)
        drifts.append(b)
        return new

    while chain.t < cfg.T - 1e-14 and not chain.stopped:
        dt = min(cfg.dt, cfg.T - chain.t)
        dW = math.sqrt(dt) * rng.standard_normal()
        chain = attempt(chain, dt, dW)
    if not chain.stopped:
        from dataclasses import replace
        chain = replace(chain, stop_reason="horizon")
    return SlePath(chain, np.array(incs), np.array(drifts), index)


def run_batch(cfg: SdeConfig, paths: int, start: int = 0, jobs: int = 1) -> list[SlePath]:
    """Independent paths start..start+paths-1; jobs > 1 uses worker processes."""
    idx = list(range(start, start + paths))
    if jobs <= 1:
        return [run_sle(cfg, i) for i in idx]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(run_sle, [cfg] * len(idx), idx))


def summary(paths: list[SlePath]) -> dict:
    reasons: dict[str, int] = {}
    for p in paths:
        reasons[p.stop_reason] = reasons.get(p.stop_reason, 0) + 1
    return {"paths": len(paths), "stop_reasons": reasons,
            "final_theta": [p.chain.theta for p in paths], "final_t": [p.chain.t for p in paths]}
