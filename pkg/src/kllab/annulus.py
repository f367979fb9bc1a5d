"""Closed-form field for doubly connected domains via the annulus prime function.

The disk with one concentric slit is the image of an annulus rho < |zeta| < 1
under the circular slit map

    f(zeta) = a P(zeta/a) / P(a zeta),   P(x) = (1-x) prod_k (1 - q^k x)(1 - q^k/x),

with q = rho^2 and 0 < rho < a < 1; f(a) = 0, the unit circle goes to itself
and |zeta| = rho covers the slit of radius a twice.  On the annulus the field
with Re = 0 on the outer circle is 1 - 2 Q(zeta/eta), Q = x P'(x)/P(x), whose
real part is 1 on the inner circle.  Transporting it by f gives Psi for the
slit disk, including thin configurations where the slit nearly touches the
unit circle and the collocation basis would need thousands of terms.

For rho close to 1 the products converge slowly, so P is evaluated through
the Jacobi imaginary transformation of theta_1, which needs only a few terms.
"""

from __future__ import annotations

import math
from functools import cached_property
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .domain import Moduli
from .errors import ConvergenceError, DomainError, PoleProximityError

_EPS_TERMS = 40.0  # exp(-40) ~ 4e-18


class PrimeFunction:
    """ln P, Q = x d/dx ln P and x dQ/dx for the annulus of inner radius rho.

    ln P is defined up to an additive constant, which cancels in every ratio
    used here.
    """

    def __init__(self, rho: float):
        if not 0.0 < rho < 1.0:
            raise DomainError("annulus radius must lie in (0, 1)")
        self.rho = rho
        self.L = -math.log(rho)
        self.transformed = self.L < 1.5
        if self.transformed:
            nterm = int(math.ceil(_EPS_TERMS * self.L / math.pi ** 2)) + 1
            self._c = -2.0 * np.arange(1, nterm + 1) * math.pi ** 2 / self.L
        else:
            nterm = int(math.ceil(_EPS_TERMS / (2 * self.L))) + 2
            self._qk = np.exp(-2.0 * self.L * np.arange(1, nterm + 1))

    # transformed representation -------------------------------------------
    def _zw(self, x):
        z = -0.5j * np.log(x)
        return z, 1j * math.pi * z / self.L

    def _e(self, w):
        w = w[..., None]
        return np.exp(self._c + 2j * w), np.exp(self._c - 2j * w)

    @staticmethod
    def _log_sin(w):
        up = w.imag >= 0
        e_up = np.exp(np.where(up, 2j * w, -2j * w))
        return np.where(up, -1j * w + np.log((e_up - 1) / 2j), 1j * w + np.log((1 - e_up) / 2j))

    @staticmethod
    def _cot(w):
        up = w.imag >= 0
        e_up = np.exp(np.where(up, 2j * w, -2j * w))
        return np.where(up, 1j * (e_up + 1) / (e_up - 1), 1j * (1 + e_up) / (1 - e_up))

    def log_p(self, x):
        x = np.asarray(x, dtype=complex)
        if not self.transformed:
            X = x[..., None]
            return np.log(1 - x) + np.sum(np.log(1 - self._qk * X) + np.log(1 - self._qk / X), axis=-1)
        z, w = self._zw(x)
        ep, em = self._e(w)
        return 1j * z - z * z / self.L + self._log_sin(w) + np.sum(np.log1p(-ep) + np.log1p(-em), axis=-1)

    def q1(self, x):
        x = np.asarray(x, dtype=complex)
        if not self.transformed:
            X = x[..., None]
            y1, y2 = self._qk * X, self._qk / X
            return -x / (1 - x) + np.sum(-y1 / (1 - y1) + y2 / (1 - y2), axis=-1)
        z, w = self._zw(x)
        ep, em = self._e(w)
        ds = np.sum(-2j * ep / (1 - ep) + 2j * em / (1 - em), axis=-1)
        d = 1j - 2 * z / self.L + (1j * math.pi / self.L) * (self._cot(w) + ds)
        return d / 2j

    def q2(self, x):
        x = np.asarray(x, dtype=complex)
        if not self.transformed:
            X = x[..., None]
            y1, y2 = self._qk * X, self._qk / X
            return -x / (1 - x) ** 2 - np.sum(y1 / (1 - y1) ** 2 + y2 / (1 - y2) ** 2, axis=-1)
        z, w = self._zw(x)
        ep, em = self._e(w)
        cot = self._cot(w)
        d2s = np.sum(4 * ep / (1 - ep) ** 2 + 4 * em / (1 - em) ** 2, axis=-1)
        d2 = -2 / self.L + (1j * math.pi / self.L) ** 2 * (-(1 + cot * cot) + d2s)
        return -d2 / 4


class SlitMap:
    """f(zeta) = e^{i gamma} a P(zeta/a)/P(a zeta) from the annulus onto the slit disk."""

    def __init__(self, rho: float, a: float, gamma: float = 0.0):
        self.P = PrimeFunction(rho)
        self.rho, self.a, self.gamma = rho, a, gamma
        self.rot = np.exp(1j * gamma)

    def log_f(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return 1j * self.gamma + math.log(self.a) + self.P.log_p(zeta / self.a) - self.P.log_p(self.a * zeta)

    def __call__(self, zeta):
        return np.exp(self.log_f(zeta))

    def R(self, zeta):
        """zeta f'(zeta) / f(zeta)."""
        zeta = np.asarray(zeta, dtype=complex)
        return self.P.q1(zeta / self.a) - self.P.q1(self.a * zeta)

    def R2(self, zeta):
        """zeta R'(zeta)."""
        zeta = np.asarray(zeta, dtype=complex)
        return self.P.q2(zeta / self.a) - self.P.q2(self.a * zeta)

    def inner_arg(self, s):
        """arg f(rho e^{is}) - gamma, in (-pi, pi)."""
        return np.angle(np.exp(self.log_f(self.rho * np.exp(1j * np.asarray(s, float))) - 1j * self.gamma))

    def critical_angle(self) -> float:
        """s in (0, pi) where arg f along the inner circle is extremal (a slit tip)."""
        s = np.exp(np.linspace(math.log(1e-13), math.log(math.pi - 1e-9), 400))
        vals = np.abs(self.inner_arg(s))
        i = int(np.argmax(vals))
        lo, hi = s[max(i - 1, 0)], s[min(i + 1, s.size - 1)]

        def g(t):
            return float(self.R(self.rho * np.exp(1j * t)).real)

        if g(lo) * g(hi) < 0:
            return brentq(g, lo, hi, xtol=1e-16, rtol=1e-15, maxiter=200)
        return float(s[i])

    def half_width(self) -> float:
        return float(abs(self.inner_arg(self.critical_angle())))

    def inverse(self, z, zeta0=None, tol: float = 1e-14, maxiter: int = 80):
        """Solve f(zeta) = z by damped Newton from a grid-based start.

        Newton runs on log f away from the zero zeta = a and on f itself near it.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if zeta0 is None:
            zeta0 = self._initial_guess(z)
        zeta = np.asarray(zeta0, dtype=complex).copy()
        target = np.log(np.where(z == 0, 1.0, z))
        zero = z == 0
        zeta[zero] = self.a
        small = np.abs(z) < 0.05
        active = ~zero
        for _ in range(maxiter):
            if not active.any():
                break
            zt = zeta[active]
            lf = self.log_f(zt)
            res = lf - target[active]
            res = res.real + 1j * ((res.imag + math.pi) % (2 * math.pi) - math.pi)
            step = res * zt / self.R(zt)
            sm = small[active]
            if sm.any():
                fz = np.exp(lf[sm])
                dz = fz * self.R(zt[sm]) / zt[sm]
                step[sm] = (fz - z[active][sm]) / dz
                res[sm] = (fz - z[active][sm]) / np.abs(z[active][sm])
            new = zt - step
            mod = np.abs(new)
            new = np.where(mod > 1, new / mod, new)
            new = np.where(mod < self.rho, new * (self.rho / np.maximum(mod, 1e-300)), new)
            zeta[active] = new
            done = np.abs(res) < tol
            idx = np.flatnonzero(active)
            active[idx[done]] = False
        return zeta

    @cached_property
    def _guess_table(self):
        nr, nt = 24, 96
        r = self.rho + (1 - self.rho) * (np.arange(nr) + 0.5) / nr
        t = 2 * math.pi * np.arange(nt) / nt
        grid = np.concatenate([(r[:, None] * np.exp(1j * t[None, :])).ravel(),
                               self.rho * np.exp(1j * t) * (1 + 1e-9)])
        return grid, self(grid), self.half_width()

    def _initial_guess(self, z):
        """Nearest grid image that is not separated from z by the slit."""
        grid, img, hw = self._guess_table
        guess = np.empty(z.shape, dtype=complex)
        for k in range(0, z.size, 512):
            blk = z[k:k + 512]
            dist = np.abs(blk[:, None] - img[None, :])
            across = (np.abs(blk)[:, None] - self.a) * (np.abs(img)[None, :] - self.a) < 0
            mid = np.angle((blk[:, None] + img[None, :]) * np.exp(-1j * self.gamma))
            dist = dist + 10.0 * (across & (np.abs(mid) < hw + 0.05))
            guess[k:k + 512] = grid[np.argmin(dist, axis=1)]
        return guess


def slit_map_for(M: Moduli) -> SlitMap:
    """Annulus slit map whose image has the single slit of M."""
    if M.nslits != 1:
        raise DomainError("annulus representation needs exactly one slit")
    a = M.m[0]
    hw = 0.5 * (M.theta_prime[0] - M.theta[0])
    gamma = 0.5 * (M.theta_prime[0] + M.theta[0])

    def width_gap(u):
        return SlitMap(a * math.exp(-u), a, 0.0).half_width() - hw

    lo, hi = 1e-12, 1.0
    while width_gap(hi) > 0:
        hi *= 2
        if hi > 200:
            raise ConvergenceError("slit too short for the annulus representation")
    if width_gap(lo) < 0:
        raise ConvergenceError("slit too long for the annulus representation")
    u = brentq(width_gap, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return SlitMap(a * math.exp(-u), a, gamma)


@dataclass(frozen=True, eq=False)
class AnnulusPsi:
    """Psi(z, xi) for a doubly connected standard domain, same interface as PsiEvaluator."""

    theta: float
    fmap: SlitMap
    eta: complex
    lam: float
    beta: float
    tips: tuple[complex, complex]
    guard: float = 1e-6
    method: str = "annulus"
    order: int = 0
    residual: float = 0.0

    @property
    def xi(self) -> complex:
        return complex(np.exp(1j * self.theta))

    @property
    def pole_angle(self) -> float:
        return self.theta

    @property
    def slit_constants(self) -> np.ndarray:
        return np.array([self.lam])

    @property
    def correction_coefficients(self) -> np.ndarray:
        return np.array([self.fmap.rho, self.fmap.a, self.fmap.gamma, self.lam, self.beta])

    def _field(self, zeta):
        return self.lam * (1 - 2 * self.fmap.P.q1(zeta / self.eta)) + 1j * self.beta

    def __call__(self, z, side=None):
        z = np.asarray(z, dtype=complex)
        if np.any(np.abs(z - self.xi) < self.guard):
            raise PoleProximityError(f"evaluation within {self.guard:g} of the pole")
        zeta = self.fmap.inverse(z.ravel()).reshape(z.shape)
        return self._field(zeta)

    def regular(self, z, side=None):
        z = np.asarray(z, dtype=complex)
        near = np.abs(z - self.xi) < 1e-4
        out = np.empty(z.shape, dtype=complex)
        if (~near).any():
            zz = z[~near]
            zeta = self.fmap.inverse(zz)
            out[~near] = self._field(zeta) - (self.xi + zz) / (self.xi - zz)
        if near.any():
            out[near] = self._regular_at_pole()
        return out

    def _regular_at_pole(self) -> complex:
        R = complex(self.fmap.R(self.eta))
        R2 = complex(self.fmap.R2(self.eta))
        return 1j * self.beta - R2 / R ** 2

    def derivative(self, z, side=None):
        z = np.asarray(z, dtype=complex)
        zeta = self.fmap.inverse(z.ravel()).reshape(z.shape)
        dq = self.fmap.P.q2(zeta / self.eta) / zeta  # d/dzeta of q1(zeta/eta)
        dzeta_dz = zeta / (z * self.fmap.R(zeta))
        return -2 * self.lam * dq * dzeta_dz

    def regular_derivative(self, z, side=None):
        z = np.asarray(z, dtype=complex)
        return self.derivative(z) - 2 * self.xi / (self.xi - z) ** 2

    def endpoint_values(self):
        start, end = (self._field(np.array([t]))[0] for t in self.tips)
        return np.array([start]), np.array([end])

    def drift(self) -> tuple[float, float]:
        h = self._regular_at_pole()
        return h.imag, abs(h.real)

    def normalization_error(self) -> float:
        return abs(complex(self._field(np.array([self.fmap.a]))[0]) - 1.0)


def annulus_psi(M: Moduli, theta: float) -> AnnulusPsi:
    fmap = slit_map_for(M)
    base = SlitMap(fmap.rho, fmap.a, 0.0)
    delta = math.remainder(theta - fmap.gamma - math.pi, 2 * math.pi)

    def g(phi):
        if phi <= -math.pi:
            return -math.pi - delta
        if phi >= math.pi:
            return math.pi - delta
        return float(np.angle(-base(np.exp(1j * phi)))) - delta

    phi = brentq(g, -math.pi, math.pi, xtol=1e-15, rtol=1e-15, maxiter=200)
    eta = complex(np.exp(1j * phi))
    R = complex(fmap.R(eta))
    lam = 1.0 / R.real
    beta = 2 * lam * float(fmap.P.q1(np.array([fmap.a / eta]))[0].imag)
    sc = base.critical_angle()
    t1, t2 = fmap.rho * np.exp(1j * sc), fmap.rho * np.exp(-1j * sc)
    a1 = float(np.angle(np.exp(base.log_f(t1))))
    tips = (t1, t2) if a1 < 0 else (t2, t1)
    ev = AnnulusPsi(float(theta), fmap, eta, lam, beta, tips)
    err = ev.normalization_error()
    object.__setattr__(ev, "residual", err)
    return ev
