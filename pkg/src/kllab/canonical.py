"""Canonical maps onto standard domains.

A domain bounded by the unit circle, circular arcs and radial hulls attached to
the circle is mapped onto a standard domain by Phi(z) = z exp(h(z)), where h is
single-valued, Im h(0) = 0, Re h = -ln|z| on the outer boundary (circle and
hulls) and Re h = c_j - ln|z| on arc j.  The image slit radii are e^{c_j} and
Phi'(0) = e^{h(0)}, so h(0) is the conformal radius at 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .basis import ReflectedBasis, Side, node_count, solve_least_squares
from .domain import Hull, Moduli, StandardDomain, slit_distance
from .errors import ConvergenceError, DomainError
from .geometry import ArcMap
from .kernel import DEFAULT_ORDER, DEFAULT_TOL, MAX_ORDER, order_schedule, slit_maps

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CanonicalMap:
    """Phi(z) = z exp(h(z)) with Phi(0) = 0 and Phi'(0) = e^{r} > 0."""

    arcs: tuple[ArcMap, ...]
    hulls: tuple[ArcMap, ...]
    order: int
    residual: float
    basis: ReflectedBasis | None
    coef: np.ndarray | None
    constants: np.ndarray
    shift: float = 0.0

    @property
    def identity(self) -> bool:
        return self.basis is None

    def regular(self, z, side: Side | None = None):
        z = np.asarray(z, dtype=complex)
        if self.basis is None:
            return np.zeros(z.shape, complex)
        return self.basis.columns(z, side) @ self.coef + 1j * self.shift

    def regular_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        if self.basis is None:
            return np.zeros(z.shape, complex)
        return self.basis.derivative_columns(z) @ self.coef

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return z * np.exp(self.regular(z))

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return np.exp(self.regular(z)) * (1.0 + z * self.regular_derivative(z))

    def log_map(self, z):
        """ln z + h(z) with the principal branch of ln z."""
        z = np.asarray(z, dtype=complex)
        return np.log(z) + self.regular(z)

    @property
    def conformal_radius(self) -> float:
        """ln Phi'(0)."""
        return float(self.regular(np.zeros(1, complex))[0].real)

    def _arc_argument(self, j: int, alpha):
        hole = self.basis.holes[j]
        alpha = np.asarray(alpha, dtype=float)
        z = hole.z_of_s(np.cos(alpha))
        return np.angle(z) + self.regular(z, Side(j, np.exp(1j * alpha))).imag

    def target_moduli(self) -> Moduli:
        """Moduli of the image domain; hulls map into the unit circle."""
        if not self.arcs:
            return Moduli()
        if self.identity:
            return Moduli(tuple(a.radius for a in self.arcs), tuple(a.start for a in self.arcs),
                          tuple(a.end for a in self.arcs))
        m, th, thp = [], [], []
        for j in range(len(self.arcs)):
            alpha = np.linspace(0, 2 * math.pi, 1025)
            arg = np.unwrap(self._arc_argument(j, alpha))
            ext = []
            for sign, idx in ((1.0, int(np.argmin(arg))), (-1.0, int(np.argmax(arg)))):
                lo, hi = alpha[max(idx - 1, 0)], alpha[min(idx + 1, alpha.size - 1)]
                ref = arg[idx]
                res = minimize_scalar(
                    lambda a: sign * (ref + _wrap_pi(self._arc_argument(j, a) - ref)),
                    bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
                ext.append(ref + _wrap_pi(float(self._arc_argument(j, res.x)) - ref))
            m.append(math.exp(self.constants[j]))
            th.append(ext[0])
            thp.append(ext[1])
        return Moduli(tuple(m), tuple(th), tuple(thp))

    def inverse(self, w, z0=None, tol: float = 1e-13, maxiter: int = 60):
        """Newton solve of Phi(z) = w, vectorized; z0 defaults to w exp(-h(w))."""
        w = np.asarray(w, dtype=complex)
        if self.identity:
            return w.copy()
        z = w * np.exp(-self.regular(w)) if z0 is None else np.asarray(z0, dtype=complex).copy()
        for _ in range(maxiter):
            f = self(z) - w
            step = f / self.derivative(z)
            # damp steps that would leave the disk
            new = z - step
            bad = np.abs(new) >= 1
            while np.any(bad):
                step = np.where(bad, 0.5 * step, step)
                new = z - step
                bad = (np.abs(new) >= 1) & (np.abs(step) > 1e-16)
            z = new
            if np.all(np.abs(step) < tol * np.maximum(1.0, np.abs(z))):
                break
        return z


def _wrap_pi(x):
    return (np.asarray(x) + math.pi) % (2 * math.pi) - math.pi


def _solve(arcs, hulls, order):
    holes = list(arcs) + list(hulls)
    basis = ReflectedBasis(holes, order)
    na = len(arcs)
    rows, rhs = [], []
    for j, hole in enumerate(holes):
        _, z, phi = hole.nodes(node_count(order))
        const = np.zeros((z.size, na))
        if j < na:
            const[:, j] = -1.0
        rows.append(np.hstack([basis.columns(z, Side(j, phi)).real, const]))
        rhs.append(-np.log(np.abs(z)))
    sol = solve_least_squares(np.vstack(rows), np.concatenate(rhs))
    coef, c = sol[:basis.ncols], sol[basis.ncols:]
    worst, scale = 0.0, 1.0
    for j, hole in enumerate(holes):
        _, z, phi = hole.nodes(node_count(order), offset=0.0)
        data = -np.log(np.abs(z))
        val = basis.columns(z, Side(j, phi)).real @ coef - (c[j] if j < na else 0.0) - data
        worst = max(worst, float(np.max(np.abs(val))))
        scale = max(scale, float(np.max(np.abs(data))))
    shift = -float((basis.columns(np.zeros(1, complex)) @ coef)[0].imag)
    return CanonicalMap(tuple(arcs), tuple(hulls), order, worst / scale, basis, coef, c, shift)


def solve_canonical(arcs: Sequence[ArcMap], hulls: Sequence[ArcMap] = (), tol: float = DEFAULT_TOL,
                    K: int = DEFAULT_ORDER, max_order: int = MAX_ORDER) -> CanonicalMap:
    """Canonical map of the unit disk minus `arcs` and minus the hulls."""
    arcs, hulls = tuple(arcs), tuple(hulls)
    if not hulls and all(a.center == 0 and not math.isinf(a.radius) for a in arcs):
        return CanonicalMap(arcs, hulls, 0, 0.0, None, None,
                            np.log([a.radius for a in arcs]) if arcs else np.zeros(0))
    best = None
    for order in order_schedule(K, max_order):
        cm = _solve(arcs, hulls, order)
        if best is None or cm.residual < best.residual:
            best = cm
        if cm.residual <= tol:
            return cm
    raise ConvergenceError(f"canonical-map residual {best.residual:.3e} > tol {tol:g} "
                           f"at order {best.order}", best.residual, best.order)


def hull_maps(A) -> tuple[ArcMap, ...]:
    """Arc maps for a hull or a sequence of hulls; only radial segments are supported."""
    if A is None:
        return ()
    hulls = [A] if isinstance(A, Hull) else list(A)
    out = []
    for H in hulls:
        if H.empty:
            continue
        angle, r = H.radial_params()
        if not 0 < r < 1:
            raise DomainError("hull must avoid the origin")
        out.append(ArcMap.radial_through_circle(angle, r))
    return tuple(out)


def canonical_map(E: StandardDomain | Moduli, A=None, tol: float = DEFAULT_TOL,
                  K: int = DEFAULT_ORDER, max_order: int = MAX_ORDER) -> CanonicalMap:
    """Phi_A: E minus the hull(s) A onto a standard domain, Phi_A(0) = 0, Phi_A'(0) > 0."""
    M = E.moduli if isinstance(E, StandardDomain) else E
    hulls = hull_maps(A)
    for H in hulls:
        seg = np.linspace(H.p0, H.p0 / abs(H.p0), 256)
        if M.nslits and np.min(slit_distance(M, seg)) <= 0:
            raise DomainError("hull meets a slit")
    return solve_canonical(slit_maps(M), hulls, tol, K, max_order)


def conformal_radius_at(M: Moduli, w: complex, K: int = DEFAULT_ORDER, tol: float = DEFAULT_TOL,
                        max_order: int = MAX_ORDER) -> float:
    """r_D(w) for the standard domain of M: move w to 0 by a disk automorphism, then solve."""
    w = complex(w)
    if M.nslits == 0:
        return -math.log(1 - abs(w) ** 2)

    def T(z):
        return (z - w) / (1 - np.conj(w) * z)

    arcs = []
    for m, a, b in zip(M.m, M.theta, M.theta_prime):
        pts = T(m * np.exp(1j * np.array([a, 0.5 * (a + b), b])))
        arcs.append(ArcMap.through_points(*pts))
    cm = solve_canonical(arcs, (), tol, K, max_order)
    return cm.conformal_radius - math.log(1 - abs(w) ** 2)
