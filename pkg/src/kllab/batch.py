"""Vectorized Schiffer-diffusion sampler for Monte Carlo experiments.

Many paths in the same standard-domain family are advanced in lock step:
the half-plane fields of all paths are solved at once by batched QR on the
collocation systems, and trace points are recovered by a compiled backward
composition of per-step maps.  The scheme is deliberately simple (Euler for
moduli and driver, one field per step, Strang-split step maps with an
exponential-Euler regular part); it trades the per-path accuracy of `loewner`
for throughput.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

from .domain import Moduli
from .sle import path_rng

NORMAL_BLOCK = 256


# ---------------------------------------------------------------------------
# Batched collocation for Psi on concentric slits


def concentric_abcd(m, th, thp):
    """Moebius coefficients (A, B, C, D) sending the arc m e^{i[th, thp]} to [-1, 1]."""
    m, th, thp = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (m, th, thp)))
    mu = 0.5 * (th + thp)
    tau = np.tan(0.25 * (thp - th))
    rot = m * np.exp(1j * mu)
    A = np.full(m.shape, -1j)
    return np.stack([A, 1j * rot, tau + 0j, tau * rot], axis=-1)


def _joukowski(s):
    return s + np.sqrt(s - 1) * np.sqrt(s + 1)


def _columns(abcd, z, K, own=None, own_phi=None):
    """Reflected-basis columns; abcd (B, ns, 4), z (B, P) -> (B, P, ns*2K) complex."""
    B, ns, _ = abcd.shape
    P = z.shape[1]
    out = np.empty((B, P, ns * 2 * K), dtype=complex)
    zc = np.conj(z)
    k = np.arange(1, K + 1)
    for j in range(ns):
        A, Bc, C, D = (abcd[:, j, i][:, None] for i in range(4))
        phi = _joukowski((A * z + Bc) / (C * z + D))
        if own is not None:
            phi = np.where(own == j, own_phi, phi)
        phr = _joukowski((A + Bc * zc) / (C + D * zc))
        u = phi[..., None] ** (-k)
        v = np.conj(phr[..., None] ** (-k))
        out[..., 2 * K * j:2 * K * j + K] = u - v
        out[..., 2 * K * j + K:2 * K * (j + 1)] = 1j * (u + v)
    return out


@dataclass
class BatchedPsi:
    abcd: np.ndarray    # (B, ns, 4)
    coef: np.ndarray    # (B, ns*2K)
    const: np.ndarray   # (B, ns) slit constants c_j
    shift: np.ndarray   # (B,)
    xi: np.ndarray      # (B,)
    K: int

    def regular(self, w):
        """h at points w of shape (B, P)."""
        cols = _columns(self.abcd, w, self.K)
        return np.einsum("bpc,bc->bp", cols, self.coef) + 1j * self.shift[:, None]

    def drift(self):
        return self.regular(self.xi[:, None])[:, 0].imag

    def moduli_rates(self, m, th, thp):
        """(d ln m, d theta, d theta') per path, shape (B, 3 ns)."""
        B, ns = m.shape
        rates = [self.const]
        for ang, phi_own in ((th, -1.0 + 0j), (thp, 1.0 + 0j)):
            z = m * np.exp(1j * ang)
            vals = np.empty((B, ns))
            for j in range(ns):
                own = np.full((B, 1), j)
                cols = _columns(self.abcd, z[:, j:j + 1], self.K, own, phi_own)
                h = np.einsum("bpc,bc->bp", cols, self.coef)[:, 0] + 1j * self.shift
                kern = (self.xi + z[:, j]) / (self.xi - z[:, j])
                vals[:, j] = (kern + h).imag
            rates.append(vals)
        return np.concatenate(rates, axis=1)


def batched_psi(m, th, thp, x, K: int = 16) -> BatchedPsi:
    """Solve Psi for B domains at once; m, th, thp of shape (B, ns), x of shape (B,)."""
    m, th, thp = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (m, th, thp))
    x = np.asarray(x, dtype=float)
    B, ns = m.shape
    abcd = concentric_abcd(m, th, thp)
    L = 4 * K + 16
    alpha = 2 * math.pi * (np.arange(L) + 0.5) / L
    s = np.cos(alpha)
    xi = np.exp(1j * x)
    blocks, rhs = [], []
    for j in range(ns):
        A, Bc, C, D = (abcd[:, j, i][:, None] for i in range(4))
        z = (D * s[None, :] - Bc) / (A - C * s[None, :])
        own = np.full(z.shape, j)
        cols = _columns(abcd, z, K, own, np.exp(1j * alpha)[None, :]).real
        const = np.zeros((B, L, ns))
        const[:, :, j] = -1.0
        blocks.append(np.concatenate([cols, const], axis=2))
        rhs.append(-((xi[:, None] + z) / (xi[:, None] - z)).real)
    Amat = np.concatenate(blocks, axis=1)
    b = np.concatenate(rhs, axis=1)
    scale = np.linalg.norm(Amat, axis=1)
    scale[scale == 0] = 1.0
    Q, R = np.linalg.qr(Amat / scale[:, None, :])
    sol = np.linalg.solve(R, np.einsum("bij,bi->bj", Q, b)[..., None])[..., 0] / scale
    coef, const = sol[:, :ns * 2 * K], sol[:, ns * 2 * K:]
    h0 = np.einsum("bpc,bc->bp", _columns(abcd, np.zeros((B, 1), complex), K), coef)[:, 0]
    return BatchedPsi(abcd, coef, const, -h0.imag, xi, K)


# ---------------------------------------------------------------------------
# Compiled backward composition


@numba.njit(cache=True)
def _jk(s):
    return s + cmath.sqrt(s - 1) * cmath.sqrt(s + 1)


@numba.njit(cache=True)
def _h(w, abcd, coef, shift, K):
    ns = abcd.shape[0]
    acc = 1j * shift
    wc = w.conjugate()
    for j in range(ns):
        A, B, C, D = abcd[j, 0], abcd[j, 1], abcd[j, 2], abcd[j, 3]
        iphi = 1.0 / _jk((A * w + B) / (C * w + D))
        iphr = 1.0 / _jk((A + B * wc) / (C + D * wc))
        pu = 1.0 + 0j
        pv = 1.0 + 0j
        base = 2 * K * j
        for k in range(K):
            pu *= iphi
            pv *= iphr
            v = pv.conjugate()
            acc += coef[base + k] * (pu - v) + coef[base + K + k] * 1j * (pu + v)
    return acc


@numba.njit(cache=True)
def _slit_inverse(w, xi, dt):
    G = w / xi
    den = (1 + G) * (1 + G)
    if den == 0:
        return -xi
    c = math.exp(-dt) * G / den
    b = 2 * c - 1
    sq = cmath.sqrt(1 - 4 * c)
    if (b.conjugate() * sq).real < 0:
        sq = -sq
    q = -0.5 * (b + sq)
    r1 = c / q
    if c == 0:
        return 0j
    r2 = q / c
    lo, hi = (r1, r2) if abs(r1) <= abs(r2) else (r2, r1)
    if abs(abs(lo) - 1) < 1e-9 and abs(hi - G) < abs(lo - G):
        lo = hi
    return xi * lo


@numba.njit(cache=True)
def compose_traces(xi_end, xihat, abcd, coef, shift, dt, K, k0, k1, active, last):
    """gamma[b, k-k0] = pulled-back xi_end[b, k] through steps k..0, for k in [k0, min(k1, last[b])).

    Entries past a path's last step are NaN.
    """
    B = xi_end.shape[0]
    ns = abcd.shape[2]
    out = np.full((B, k1 - k0), np.nan + 0j, dtype=np.complex128)
    for b in range(B):
        if not active[b]:
            continue
        for k in range(k0, min(k1, last[b])):
            w = xi_end[b, k]
            for j in range(k, -1, -1):
                if ns > 0:
                    w = w * cmath.exp(-0.5 * dt * _h(w, abcd[b, j], coef[b, j], shift[b, j], K))
                w = _slit_inverse(w, xihat[b, j], dt)
                if ns > 0:
                    w = w * cmath.exp(-0.5 * dt * _h(w, abcd[b, j], coef[b, j], shift[b, j], K))
            out[b, k - k0] = w
    return out


# ---------------------------------------------------------------------------
# Lock-step sampler


@dataclass
class HullTarget:
    """Radial hull A = [r_tip, 1] e^{i angle} used as a conditioning obstacle."""

    angle: float
    r_tip: float

    def distance(self, z):
        u = np.exp(1j * self.angle)
        t = np.clip((z * np.conj(u)).real, self.r_tip, 1.0)
        return np.abs(z - t * u)


@dataclass
class ExitSample:
    """Per-path outcome: status in {'exit', 'hit', 'horizon', 'collision'}."""

    angle: np.ndarray
    status: np.ndarray
    t_exit: np.ndarray
    traces: list = field(default_factory=list)

    @property
    def survivors(self) -> np.ndarray:
        return self.angle[self.status == "exit"]


class _Growable:
    def __init__(self, shape_tail, dtype, cap=256):
        self.a = np.zeros((shape_tail[0], cap) + tuple(shape_tail[1:]), dtype=dtype)

    def ensure(self, k):
        if k >= self.a.shape[1]:
            new = np.zeros((self.a.shape[0], 2 * self.a.shape[1]) + self.a.shape[2:], dtype=self.a.dtype)
            new[:, :self.a.shape[1]] = self.a
            self.a = new


def sample_exits(M: Moduli, theta0: float, kappa: float, paths: int, seed: int, rho: float,
                 dt: float, hull: HullTarget | None = None, to_domain: Callable | None = None,
                 start: int = 0, K: int = 16, group: int = 500, t_max: float = 3.0,
                 delta_hull: float = 0.02, delta_circle: float = 0.02, chunk: int = 16,
                 keep_traces: bool = False, drift: bool = True,
                 marks: tuple[float, float] | None = None) -> ExitSample:
    """Run paths until their trace, read in the comparison domain through `to_domain`,
    first enters |z| <= rho.

    Paths whose trace comes within delta_hull of `hull`, or touches the circle
    collar beyond it (swallowing it), are marked 'hit'.  With `marks`, the
    boundary arc between the two angles (counterclockwise, not containing the
    start) is an obstacle instead: a path is marked 'hit' at the first step
    whose driver overtakes the flowed image of either end, which is the
    discrete form of the growth touching or enclosing that arc.
    """
    angles, status, texit, traces = [], [], [], []
    for g0 in range(start, start + paths, group):
        n = min(group, start + paths - g0)
        res = _run_group(M, theta0, kappa, range(g0, g0 + n), seed, rho, dt, hull, to_domain, K,
                         t_max, delta_hull, delta_circle, chunk, keep_traces, drift, marks)
        angles.append(res[0])
        status.append(res[1])
        texit.append(res[2])
        traces.extend(res[3])
    return ExitSample(np.concatenate(angles), np.concatenate(status), np.concatenate(texit), traces)


def _run_group(M, theta0, kappa, indices, seed, rho, dt, hull, to_domain, K, t_max, dh, dc, chunk,
               keep, drift, marks):
    B = len(indices)
    ns = M.nslits
    rngs = [path_rng(seed, i) for i in indices]
    normals = np.empty((B, NORMAL_BLOCK))
    used = NORMAL_BLOCK
    theta = np.full(B, float(theta0))
    m = np.tile(np.asarray(M.m, float), (B, 1))
    th = np.tile(np.asarray(M.theta, float), (B, 1))
    thp = np.tile(np.asarray(M.theta_prime, float), (B, 1))
    xi_end = _Growable((B,), complex)
    xihat = _Growable((B,), complex)
    abcd = _Growable((B, ns, 4), complex)
    coef = _Growable((B, ns * 2 * K), float)
    shift = _Growable((B,), float)
    active = np.ones(B, dtype=bool)
    stepping = np.ones(B, dtype=bool)
    last = np.zeros(B, dtype=np.int64)
    hit_at = np.full(B, -1, dtype=np.int64)
    if marks is not None:
        rel = np.tile(np.asarray(marks, float) - theta0, (B, 1))
        if not 0 < rel[0, 0] < rel[0, 1] < 2 * math.pi:
            raise ValueError("marks must satisfy theta0 < near < far < theta0 + 2 pi")
    status = np.array(["horizon"] * B, dtype=object)
    angle = np.full(B, np.nan)
    texit = np.full(B, np.nan)
    prev = np.ones(B, dtype=complex)
    lift = np.zeros(B)
    pts: list[list[complex]] = [[1 + 0j] for _ in range(B)] if keep else []
    sq = math.sqrt(kappa * dt)
    k = 0
    checked = 0
    nsteps = int(math.ceil(t_max / dt))
    while stepping.any() and k < nsteps:
        if used == NORMAL_BLOCK:
            for i, r in enumerate(rngs):
                normals[i] = r.standard_normal(NORMAL_BLOCK)
            used = 0
        for arr in (xi_end, xihat, abcd, coef, shift):
            arr.ensure(k)
        idx = np.flatnonzero(stepping)
        new_theta = theta[idx] + sq * normals[idx, used]
        if ns:
            psi = batched_psi(m[idx], th[idx], thp[idx], theta[idx], K)
            if drift:
                new_theta = new_theta + psi.drift() * dt
            rates = psi.moduli_rates(m[idx], th[idx], thp[idx])
            abcd.a[idx, k] = psi.abcd
            coef.a[idx, k] = psi.coef
            shift.a[idx, k] = psi.shift
            xe = np.exp(1j * new_theta)
            xh = xe * np.exp(-0.5 * dt * psi.regular(xe[:, None])[:, 0])
            m[idx] = m[idx] * np.exp(dt * rates[:, :ns])
            th[idx] += dt * rates[:, ns:2 * ns]
            thp[idx] += dt * rates[:, 2 * ns:]
            bad = ~(np.all((m[idx] > 0) & (m[idx] < 1), axis=1) & np.isfinite(new_theta))
            if bad.any():
                status[idx[bad]] = "collision"
                active[idx[bad]] = False
                stepping[idx[bad]] = False
            flow = lambda ang: 0.5 * dt * psi.regular(np.exp(1j * ang)).imag
        else:
            xe = np.exp(1j * new_theta)
            xh = xe
            flow = lambda ang: np.zeros_like(ang)
        if marks is not None:
            th_hat = new_theta - flow(new_theta[:, None])[:, 0]
            phi = theta[idx, None] + rel[idx]
            r1 = phi + flow(phi) - th_hat[:, None]
            crossed = (r1[:, 0] <= 0) | (r1[:, 1] >= 2 * math.pi)
            r2 = 2 * np.arccos(np.clip(math.exp(-0.5 * dt) * np.cos(0.5 * r1), -1, 1))
            phi = th_hat[:, None] + r2
            rel[idx] = phi + flow(phi) - new_theta[:, None]
            hit_at[idx[crossed]] = k + 1
            stepping[idx[crossed]] = False
        xi_end.a[idx, k] = xe
        xihat.a[idx, k] = xh / np.abs(xh)
        theta[idx] = new_theta
        last[idx] = k + 1
        used += 1
        k += 1
        if k - checked >= chunk or not (k < nsteps and stepping.any()):
            gam = compose_traces(xi_end.a, xihat.a, abcd.a, coef.a, shift.a, dt, K, checked, k, active,
                                 last)
            _scan(gam, checked, active, prev, lift, status, angle, texit, rho, dt, hull, to_domain,
                  dh, dc, pts if keep else None, hit_at)
            stepping &= active
            checked = k
    return angle, status.astype(str), texit, pts


def _scan(gam, k0, active, prev, lift, status, angle, texit, rho, dt, hull, to_domain, dh, dc, pts,
          hit_at):
    idx = np.flatnonzero(active)
    if idx.size == 0:
        return
    g = gam[idx]
    if to_domain is not None:
        z = np.full_like(g, np.nan)
        start = prev[idx].copy()
        for c in range(g.shape[1]):
            ok = np.isfinite(g[:, c])
            if not ok.any():
                break
            z[ok, c] = to_domain(g[ok, c], start[ok])
            start[ok] = z[ok, c]
    else:
        z = g
    for r, b in enumerate(idx):
        for c in range(z.shape[1]):
            if k0 + c + 1 == hit_at[b]:
                status[b] = "hit"
                active[b] = False
                break
            zc, zp = z[r, c], prev[b]
            if not cmath.isfinite(zc):
                break
            if pts is not None:
                pts[b].append(complex(zc))
            lift[b] += math.remainder(cmath.phase(zc) - cmath.phase(zp), 2 * math.pi)
            if hull is not None:
                seg = zp + (zc - zp) * np.linspace(0, 1, 5)
                near = np.min(hull.distance(seg)) < dh
                a = hull.angle % (2 * math.pi)
                swallow = abs(zc) > 1 - dc and (lift[b] >= a or lift[b] <= a - 2 * math.pi)
                if near or swallow:
                    status[b] = "hit"
                    active[b] = False
                    break
            if abs(zc) <= rho:
                d = zc - zp
                aa, bb, cc = abs(d) ** 2, 2 * (zp * d.conjugate()).real, abs(zp) ** 2 - rho ** 2
                s = (-bb - math.sqrt(max(bb * bb - 4 * aa * cc, 0.0))) / (2 * aa) if aa > 0 else 0.0
                hit = zp + min(max(s, 0.0), 1.0) * d
                angle[b] = cmath.phase(hit)
                texit[b] = (k0 + c + 1) * dt
                status[b] = "exit"
                active[b] = False
                break
            prev[b] = zc
