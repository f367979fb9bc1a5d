"""Radial Komatu-Loewner chains: moduli ODE, point flow and trace extraction.

The chain stores, for every accepted step, the four Runge-Kutta stage fields
Psi used to advance the moduli.  Points are flowed with the same stages, so the
joint system (moduli, g_t(z)) is integrated by one consistent RK4 scheme.

Traces use a split form of each step map: Psi = disk kernel + h, where the
kernel part with a frozen driver is the exact radial slit map and the h part is
a smooth flow handled by one RK4 substep on each side (Strang splitting).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .domain import Moduli, min_slit_gap, validate_moduli
from .errors import (ConvergenceError, LeftDomainError, PoleProximityError, StepCollapse,
                     StepRejected, TraceUnresolved)
from .kernel import DEFAULT_ORDER, DEFAULT_TOL, MAX_ORDER, DomainFunctionSet, PsiEvaluator, solve_psi

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainConfig:
    order: int = DEFAULT_ORDER
    tol: float = DEFAULT_TOL
    max_order: int = MAX_ORDER
    eps_stop: float = 1e-3
    eps_hit: float = 1e-3
    step_tol: float | None = 1e-7
    dt_min: float = 1e-9
    trace_tol: float = 1e-5


# ---------------------------------------------------------------------------
# Exact radial slit maps of the disk (constant driver xi over a time dt)


def _reciprocal_root(c, ref):
    """Root of c v^2 + (2c - 1) v + c = 0 (roots v, 1/v): inside the disk, or nearest ref."""
    c = np.asarray(c, dtype=complex)
    b = 2 * c - 1
    sq = np.sqrt(1 - 4 * c)
    sq = np.where((np.conj(b) * sq).real >= 0, sq, -sq)
    q = -0.5 * (b + sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_small = c / q
        r_big = np.where(c == 0, np.inf, q / c)
    a_small, a_big = np.abs(r_small), np.abs(r_big)
    lo = np.where(a_small <= a_big, r_small, r_big)
    hi = np.where(a_small <= a_big, r_big, r_small)
    close = np.abs(np.abs(lo) - 1) < 1e-9
    pick_hi = close & (np.abs(hi - ref) < np.abs(lo - ref))
    return np.where(pick_hi, hi, lo)


def slit_step_forward(z, xi, dt):
    """Map D minus the slit grown at xi in time dt onto D (g/(xi+g)^2-type relation)."""
    u = np.asarray(z, dtype=complex) / xi
    with np.errstate(divide="ignore", invalid="ignore"):
        C = math.exp(dt) * u / (1 + u) ** 2
    G = np.where(np.isfinite(C), _reciprocal_root(np.where(np.isfinite(C), C, 0), u), -1.0)
    return xi * G


def slit_step_inverse(w, xi, dt):
    """Inverse of slit_step_forward: D onto D minus the slit [tip, xi]."""
    G = np.asarray(w, dtype=complex) / xi
    with np.errstate(divide="ignore", invalid="ignore"):
        c = math.exp(-dt) * G / (1 + G) ** 2
    u = np.where(np.isfinite(c), _reciprocal_root(np.where(np.isfinite(c), c, 0), G), -1.0)
    return xi * u


def _trivial(field) -> bool:
    return isinstance(field, PsiEvaluator) and field.basis is None


def _regular_flow(field: PsiEvaluator, w, ds):
    """One RK4 step of dw/ds = w h(w) for the regular part h of a field."""
    if _trivial(field):
        return w
    f = lambda v: v * field.regular(v)
    k1 = f(w)
    k2 = f(w + 0.5 * ds * k1)
    k3 = f(w + 0.5 * ds * k2)
    k4 = f(w + ds * k3)
    return w + ds / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _regular_flow_inverse(field: PsiEvaluator, w, ds, iters: int = 30):
    """Exact inverse of _regular_flow(field, ., ds), by fixed-point iteration."""
    if _trivial(field):
        return w
    w = np.asarray(w, dtype=complex)
    v = _regular_flow(field, w, -ds)
    for _ in range(iters):
        r = _regular_flow(field, v, ds) - w
        v = v - r
        if np.all(np.abs(r) < 1e-15):
            break
    return v


# ---------------------------------------------------------------------------
# Chain data


@dataclass(frozen=True, eq=False)
class StepRecord:
    """One accepted step: driver end values and the four RK4 stage fields."""

    dt: float
    theta0: float
    theta1: float
    fields: tuple
    error: float = 0.0

    @property
    def slit_constants(self) -> np.ndarray:
        return self.fields[0].slit_constants

    @property
    def endpoint_values(self):
        return self.fields[0].endpoint_values()

    def split_driver(self) -> complex:
        """Driver of the frozen slit map: xi(t1) pulled back through the end half-flow."""
        xi1 = np.exp(1j * self.theta1)
        return complex(_regular_flow_inverse(self.fields[3], np.array([xi1]), 0.5 * self.dt)[0])

    def forward(self, z):
        z = _regular_flow(self.fields[0], np.asarray(z, dtype=complex), 0.5 * self.dt)
        xi = self.split_driver()
        z = slit_step_forward(z, xi / abs(xi), self.dt)
        return _regular_flow(self.fields[3], z, 0.5 * self.dt)

    def inverse(self, w):
        w = _regular_flow_inverse(self.fields[3], np.asarray(w, dtype=complex), 0.5 * self.dt)
        xi = self.split_driver()
        w = slit_step_inverse(w, xi / abs(xi), self.dt)
        return _regular_flow_inverse(self.fields[0], w, 0.5 * self.dt)


@dataclass(frozen=True, eq=False)
class LoewnerChain:
    """Time grid, driving angles and moduli of a chain, with per-step map data."""

    t_grid: tuple[float, ...]
    theta_path: tuple[float, ...]
    moduli_path: tuple[Moduli, ...]
    step_meta: tuple[StepRecord, ...] = ()
    stop_reason: str = "none"
    config: ChainConfig = field(default_factory=ChainConfig)
    log_derivative: tuple[float, ...] = (0.0,)

    @classmethod
    def start(cls, M: Moduli, theta0: float = 0.0, config: ChainConfig | None = None) -> "LoewnerChain":
        M.checked()
        return cls((0.0,), (float(theta0),), (M,), (), "none", config or ChainConfig(), (0.0,))

    @property
    def t(self) -> float:
        return self.t_grid[-1]

    @property
    def moduli(self) -> Moduli:
        return self.moduli_path[-1]

    @property
    def theta(self) -> float:
        return self.theta_path[-1]

    @property
    def stopped(self) -> bool:
        return self.stop_reason != "none"

    def __len__(self) -> int:
        return len(self.step_meta)

    def theta_at(self, t: float) -> float:
        return float(np.interp(t, self.t_grid, self.theta_path))

    def records(self):
        for k, (t, th, M) in enumerate(zip(self.t_grid, self.theta_path, self.moduli_path)):
            yield {"t": t, "theta": th, "m": list(M.m), "th": list(M.theta), "thp": list(M.theta_prime)}

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec, allow_nan=False) + "\n")


# ---------------------------------------------------------------------------
# Moduli ODE


def _psi(M: Moduli, theta: float, cfg: ChainConfig) -> PsiEvaluator:
    return solve_psi(M, theta, cfg.order, cfg.tol, cfg.max_order)


def rhs_from_psi(psi: PsiEvaluator) -> np.ndarray:
    """(d ln m/dt, d theta/dt, d theta'/dt) from the slit constants and endpoint values."""
    start, end = psi.endpoint_values()
    return np.concatenate([np.asarray(psi.slit_constants, float), start.imag, end.imag])


def moduli_rhs(fns: DomainFunctionSet | Moduli, x: float, config: ChainConfig | None = None) -> np.ndarray:
    cfg = config or ChainConfig()
    M = fns.domain.moduli if isinstance(fns, DomainFunctionSet) else fns
    if M.nslits == 0:
        return np.zeros(0)
    return rhs_from_psi(_psi(M, x, cfg))


def _state(y) -> Moduli:
    M = Moduli.from_array(y)
    if not np.all(np.isfinite(y)) or validate_moduli(M):
        raise StepRejected("stage state left the moduli space")
    return M


def _rk4(y0, th0, th1, dt, cfg):
    def stage(y, th):
        psi = _psi(_state(y), th, cfg)
        return rhs_from_psi(psi), psi

    thm = 0.5 * (th0 + th1)
    k1, p1 = stage(y0, th0)
    k2, p2 = stage(y0 + 0.5 * dt * k1, thm)
    k3, p3 = stage(y0 + 0.5 * dt * k2, thm)
    k4, p4 = stage(y0 + dt * k3, th1)
    y1 = y0 + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y1, (p1, p2, p3, p4)


def _origin_increment(fields, dt):
    v = [float(complex(p(np.zeros(1, complex))[0]).real) for p in fields]
    return dt / 6 * (v[0] + 2 * v[1] + 2 * v[2] + v[3])


def advance_chain(chain: LoewnerChain, driver, dt: float) -> LoewnerChain:
    """Append one step; `driver` is the angle at t + dt or a callable theta(t).

    Raises StepRejected when a stage leaves the moduli space or the
    step-doubling error estimate exceeds config.step_tol.
    """
    if chain.stopped:
        raise ValueError(f"chain already stopped ({chain.stop_reason})")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return chain
    cfg = chain.config
    t0, th0 = chain.t, chain.theta
    th1 = float(driver(t0 + dt)) if callable(driver) else float(driver)
    M0 = chain.moduli
    if M0.nslits == 0:
        fields = (PsiEvaluator(th0, np.zeros(0), 0, 0.0),) * 3 + (PsiEvaluator(th1, np.zeros(0), 0, 0.0),)
        rec = StepRecord(dt, th0, th1, fields)
        return replace(chain, t_grid=chain.t_grid + (t0 + dt,), theta_path=chain.theta_path + (th1,),
                       moduli_path=chain.moduli_path + (M0,), step_meta=chain.step_meta + (rec,),
                       log_derivative=chain.log_derivative + (chain.log_derivative[-1] + dt,))
    y0 = M0.as_array()
    try:
        y1, fields = _rk4(y0, th0, th1, dt, cfg)
        M1 = _state(y1)
        err = 0.0
        if cfg.step_tol is not None:
            thq = 0.5 * (th0 + th1)
            yh, _ = _rk4(y0, th0, thq, 0.5 * dt, cfg)
            yh, _ = _rk4(yh, thq, th1, 0.5 * dt, cfg)
            _state(yh)
            err = float(np.max(np.abs(yh - y1)))
            if err > cfg.step_tol:
                raise StepRejected(f"local error {err:.2e} > {cfg.step_tol:g}")
    except ConvergenceError as exc:
        raise StepRejected(f"field solve failed: {exc}") from exc
    rec = StepRecord(dt, th0, th1, fields, err)
    stop = "slit-collision" if max(M1.m) >= 1 - cfg.eps_stop else "none"
    return replace(chain, t_grid=chain.t_grid + (t0 + dt,), theta_path=chain.theta_path + (th1,),
                   moduli_path=chain.moduli_path + (M1,), step_meta=chain.step_meta + (rec,),
                   stop_reason=stop,
                   log_derivative=chain.log_derivative + (chain.log_derivative[-1]
                                                          + _origin_increment(fields, dt),))


def constant_driver(x: float) -> Callable[[float], float]:
    return lambda t: float(x)


def run_chain(M0: Moduli, driver, T: float, dt: float, config: ChainConfig | None = None,
              theta0: float | None = None) -> LoewnerChain:
    """Integrate until T or slit collision, halving dt on rejected steps."""
    if not callable(driver):
        driver = constant_driver(float(driver))
    th0 = float(driver(0.0)) if theta0 is None else float(theta0)
    chain = LoewnerChain.start(M0, th0, config)
    cfg = chain.config
    h = dt
    while chain.t < T - 1e-14 and not chain.stopped:
        step = min(h, T - chain.t)
        try:
            chain = advance_chain(chain, driver, step)
        except StepRejected as exc:
            h = 0.5 * step
            log.debug("t=%.6f: %s; dt -> %.3e", chain.t, exc, h)
            if h < cfg.dt_min:
                raise StepCollapse(f"step size fell below {cfg.dt_min:g} at t={chain.t:.6g}",
                                   {"t": chain.t, "theta": chain.theta,
                                    "moduli": chain.moduli.to_dict()}) from exc
            continue
        h = min(dt, 2 * h)
    if not chain.stopped and chain.t >= T - 1e-14:
        chain = replace(chain, stop_reason="horizon")
    return chain


# ---------------------------------------------------------------------------
# Point flow and traces


@dataclass(frozen=True)
class FlowResult:
    times: np.ndarray
    values: np.ndarray
    t_hit: float


def flow_point(chain: LoewnerChain, z, method: str = "rk4", upto: int | None = None) -> FlowResult:
    """g_t(z) along the chain; t_hit is the first grid time with |g - xi| <= eps_hit.

    method "rk4" integrates d ln g/dt = Psi with the stored stage fields;
    "split" composes the split step maps used for traces.
    """
    cfg = chain.config
    z = complex(z)
    nsteps = len(chain.step_meta) if upto is None else upto
    times = [0.0]
    vals = [z]
    g = np.array([z])
    t_hit = math.inf
    if z == 0:
        return FlowResult(np.array(chain.t_grid[:nsteps + 1]), np.zeros(nsteps + 1, complex), math.inf)
    for k in range(nsteps):
        rec = chain.step_meta[k]
        if method == "split":
            g = rec.forward(g)
        else:
            try:
                f = lambda v, p: v * p(v)
                p1, p2, p3, p4 = rec.fields
                k1 = f(g, p1)
                k2 = f(g + 0.5 * rec.dt * k1, p2)
                k3 = f(g + 0.5 * rec.dt * k2, p3)
                k4 = f(g + rec.dt * k3, p4)
            except PoleProximityError:
                t_hit = chain.t_grid[k]
                break
            g = g + rec.dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if abs(g[0]) > 1 + 1e-6:
            raise LeftDomainError(f"|g| = {abs(g[0]):.6g} at t = {chain.t_grid[k + 1]:.6g}")
        times.append(chain.t_grid[k + 1])
        vals.append(complex(g[0]))
        if abs(g[0] - np.exp(1j * chain.theta_path[k + 1])) <= cfg.eps_hit:
            t_hit = chain.t_grid[k + 1]
            break
    return FlowResult(np.array(times), np.array(vals), t_hit)


def pull_back(chain: LoewnerChain, w, k: int, k_star: int = 0):
    """g_{t_k*} o g_{t_k}^{-1} applied to points w, by composing inverse step maps."""
    w = np.asarray(w, dtype=complex)
    for j in range(k - 1, k_star - 1, -1):
        w = chain.step_meta[j].inverse(w)
    return w


@dataclass(frozen=True)
class TraceSample:
    t: float
    gamma: complex
    roundtrip_residual: float


def _grid_index(chain: LoewnerChain, t: float) -> int:
    k = int(np.searchsorted(chain.t_grid, t - 1e-13))
    if k >= len(chain.t_grid) or abs(chain.t_grid[k] - t) > 1e-12:
        raise ValueError(f"t={t} is not a grid time of the chain")
    return k


def trace_point(chain: LoewnerChain, t: float, check: bool = True, strict: bool = True) -> TraceSample:
    """Tip gamma(t) = g_t^{-1}(xi(t)) at a grid time, with a forward round-trip check.

    With strict=False a residual above trace_tol is recorded instead of raised.
    """
    if t > chain.t + 1e-12:
        raise ValueError("t beyond chain horizon")
    k = _grid_index(chain, t)
    xi = np.exp(1j * chain.theta_path[k])
    gamma = complex(pull_back(chain, np.array([xi]), k)[0])
    if not check or k == 0:
        return TraceSample(chain.t_grid[k], gamma, 0.0)
    w = np.array([gamma])
    for j in range(k):
        w = chain.step_meta[j].forward(w)
    res = float(abs(w[0] - xi))
    if strict and res > chain.config.trace_tol:
        raise TraceUnresolved(f"round-trip residual {res:.2e} at t={t:.6g}")
    return TraceSample(chain.t_grid[k], gamma, res)


def trace(chain: LoewnerChain, check: bool = True, strict: bool = True) -> list[TraceSample]:
    return [trace_point(chain, t, check, strict) for t in chain.t_grid]


def increment_check(chain: LoewnerChain, t_star: float, t: float, nodes: int = 200) -> float:
    """(1/2pi) * integral of ln|g_{t,t*}(e^{i phi})| minus (t* - t).

    Only the arc near xi(t) that is pulled back onto the grown hull contributes;
    it is located by bisection and integrated with a cosine substitution that
    absorbs the square-root behaviour at its ends.
    """
    if t_star > t:
        raise ValueError("need t_star <= t")
    k, ks = _grid_index(chain, t), _grid_index(chain, t_star)
    if k == ks:
        return 0.0
    x = chain.theta_path[k]

    def depth(phi):
        return np.log(np.abs(pull_back(chain, np.exp(1j * np.atleast_1d(phi)), k, ks)))

    inside = lambda phi: depth(phi)[0] < -1e-13

    def edge(sign):
        lo, hi = 0.0, math.pi
        grid = np.linspace(0, math.pi, 4097)[1:]
        vals = depth(x + sign * grid)
        out = np.nonzero(vals >= -1e-13)[0]
        if out.size:
            hi = grid[out[0]]
            lo = grid[out[0] - 1] if out[0] > 0 else 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if inside(x + sign * mid):
                lo = mid
            else:
                hi = mid
        return x + sign * hi

    b0, b1 = edge(-1.0), edge(1.0)
    u, wts = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (u + 1)
    phi = b0 + (b1 - b0) * 0.5 * (1 - np.cos(math.pi * s))
    jac = (b1 - b0) * 0.5 * math.pi * np.sin(math.pi * s) * 0.5
    integral = float(np.sum(wts * jac * depth(phi))) / (2 * math.pi)
    return integral - (t_star - t)


def write_trace_csv(samples: Sequence[TraceSample], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "gamma_re", "gamma_im", "residual"])
        for s in samples:
            w.writerow([f"{s.t:.16e}", f"{s.gamma.real:.16e}", f"{s.gamma.imag:.16e}",
                        f"{s.roundtrip_residual:.16e}"])
