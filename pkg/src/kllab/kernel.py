"""Domain functions of a standard domain by least-squares collocation.

Everything here is expressed through the reflected arc basis of `basis.py`:
the half-plane field Psi(z, xi), harmonic measures with their analytic
completions, the period matrix, Green functions, conformal radius and the
domain constant.  The unit disk uses closed forms.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .basis import LogTerms, ReflectedBasis, Side, node_count, solve_least_squares
from .domain import Moduli, StandardDomain, validate_moduli
from .errors import (ConvergenceError, DegeneratePeriodsError, DomainError, PoleCollisionError,
                     PoleProximityError)
from .geometry import ArcMap

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_ORDER = 24
MAX_ORDER = 320
POLE_GUARD = 1e-6


def slit_maps(M: Moduli) -> list[ArcMap]:
    return [ArcMap.concentric(m, a, b) for m, a, b in zip(M.m, M.theta, M.theta_prime)]


def order_schedule(order: int, max_order: int) -> list[int]:
    out = [int(order)]
    while out[-1] < max_order:
        out.append(min(max_order, int(math.ceil(out[-1] * 1.5))))
    return out


def disk_kernel(z, xi):
    return (xi + z) / (xi - z)


def disk_kernel_derivative(z, xi):
    return 2 * xi / (xi - z) ** 2


# ---------------------------------------------------------------------------
# Half-plane field Psi


@dataclass(frozen=True, eq=False)
class PsiEvaluator:
    """z -> Psi(z, xi): disk kernel plus a regular correction h.

    Re Psi vanishes on the unit circle and equals slit_constants[j] on slit j;
    the imaginary constant is fixed by Im Psi(0) = 0.
    """

    theta: float
    slit_constants: np.ndarray
    order: int
    residual: float
    basis: ReflectedBasis | None = None
    coef: np.ndarray | None = None
    shift: float = 0.0
    guard: float = POLE_GUARD
    method: str = "collocation"

    @property
    def xi(self) -> complex:
        return cmath.exp(1j * self.theta)

    @property
    def pole_angle(self) -> float:
        return self.theta

    @property
    def correction_coefficients(self) -> np.ndarray:
        return np.zeros(0) if self.coef is None else self.coef

    def regular(self, z, side: Side | None = None):
        """h(z) = Psi(z) - (xi+z)/(xi-z); analytic up to the unit circle near xi."""
        z = np.asarray(z, dtype=complex)
        if self.basis is None:
            return np.zeros(z.shape, dtype=complex)
        return self.basis.columns(z, side) @ self.coef + 1j * self.shift

    def regular_derivative(self, z, side: Side | None = None):
        z = np.asarray(z, dtype=complex)
        if self.basis is None:
            return np.zeros(z.shape, dtype=complex)
        return self.basis.derivative_columns(z, side) @ self.coef

    def _check_pole(self, z):
        xi = self.xi
        near = abs(complex(z.flat[0]) - xi) < self.guard if z.size == 1 else np.any(np.abs(z - xi) < self.guard)
        if near:
            raise PoleProximityError(f"evaluation within {self.guard:g} of the pole")

    def __call__(self, z, side: Side | None = None):
        z = np.asarray(z, dtype=complex)
        self._check_pole(z)
        return disk_kernel(z, self.xi) + self.regular(z, side)

    def derivative(self, z, side: Side | None = None):
        z = np.asarray(z, dtype=complex)
        self._check_pole(z)
        return disk_kernel_derivative(z, self.xi) + self.regular_derivative(z, side)

    def on_slit(self, j: int, alpha):
        """Psi at the two-sided slit parametrization phi = e^{i alpha} of slit j."""
        hole = self.basis.holes[j]
        alpha = np.asarray(alpha, dtype=float)
        z = hole.z_of_s(np.cos(alpha))
        return self(z, Side(j, np.exp(1j * alpha)))

    def endpoint_values(self) -> tuple[np.ndarray, np.ndarray]:
        """Psi at m_j e^{i theta_j} and m_j e^{i theta'_j}."""
        if self.basis is None:
            return np.zeros(0, complex), np.zeros(0, complex)
        start = np.array([complex(self.on_slit(j, math.pi)) for j in range(len(self.basis.holes))])
        end = np.array([complex(self.on_slit(j, 0.0)) for j in range(len(self.basis.holes))])
        return start, end

    def drift(self) -> tuple[float, float]:
        """(b, |Re h(xi)|): b = -i h(xi) should be real."""
        h = complex(self.regular(self.xi))
        return h.imag, abs(h.real)

    def normalization_error(self) -> float:
        return abs(complex(self(0j)) - 1.0)


def _psi_collocation(M: Moduli, theta: float, order: int):
    holes = slit_maps(M)
    basis = ReflectedBasis(holes, order)
    xi = np.exp(1j * theta)
    nsl = len(holes)
    rows, rhs = [], []
    for j, hole in enumerate(holes):
        _, z, phi = hole.nodes(node_count(order))
        cols = basis.columns(z, Side(j, phi)).real
        const = np.zeros((z.size, nsl))
        const[:, j] = -1.0
        rows.append(np.hstack([cols, const]))
        rhs.append(-disk_kernel(z, xi).real)
    sol = solve_least_squares(np.vstack(rows), np.concatenate(rhs))
    coef, c = sol[:basis.ncols], sol[basis.ncols:]
    # held-out residual between the nodes
    worst, scale = 0.0, 1.0
    for j, hole in enumerate(holes):
        _, z, phi = hole.nodes(node_count(order), offset=0.0)
        k = disk_kernel(z, xi).real
        val = k + basis.columns(z, Side(j, phi)).real @ coef - c[j]
        worst = max(worst, float(np.max(np.abs(val))))
        scale = max(scale, float(np.max(np.abs(k))))
    shift = -float((basis.columns(np.zeros(1, complex)) @ coef)[0].imag)
    return PsiEvaluator(float(theta), c, order, worst / scale, basis, coef, shift)


def predicted_order(M: Moduli) -> float:
    """Rough basis order needed for 1e-8 accuracy, driven by slit-to-circle gaps."""
    if M.nslits == 0:
        return 0.0
    return 12.0 / max(1e-12, min(1.0 - m for m in M.m))


@lru_cache(maxsize=4096)
def _solve_psi_cached(M: Moduli, theta: float, order: int, tol: float, max_order: int,
                      fallback: bool) -> PsiEvaluator:
    if M.nslits == 0:
        return PsiEvaluator(float(theta), np.zeros(0), 0, 0.0)
    guess = predicted_order(M)
    if fallback and M.nslits == 1 and guess > 0.5 * max_order:
        from .annulus import annulus_psi
        return annulus_psi(M, theta)
    best = None
    for K in order_schedule(max(order, min(max_order, int(guess))), max_order):
        ev = _psi_collocation(M, theta, K)
        if best is None or ev.residual < best.residual:
            best = ev
        if ev.residual <= tol:
            return ev
    if fallback and M.nslits == 1:
        from .annulus import annulus_psi
        log.debug("collocation stalled at %.2e; using annulus representation", best.residual)
        return annulus_psi(M, theta)
    raise ConvergenceError(f"Psi residual {best.residual:.3e} > tol {tol:g} at order {best.order}",
                           best.residual, best.order)


def solve_psi(M: Moduli, theta: float, order: int = DEFAULT_ORDER, tol: float = DEFAULT_TOL,
              max_order: int = MAX_ORDER, fallback: bool = True) -> PsiEvaluator:
    """Half-plane field for moduli M with pole at e^{i theta}."""
    problems = validate_moduli(M)
    if problems:
        raise DomainError("; ".join(problems))
    return _solve_psi_cached(M, float(theta), int(order), float(tol), int(max_order), bool(fallback))


# ---------------------------------------------------------------------------
# Harmonic measures, periods and Green functions


def _enrichment_points(holes, w, reach: float = 1.6):
    """Mirror points in the opening plane of slits close to the pole w."""
    out = []
    for j, hole in enumerate(holes):
        pw = complex(hole.phi(np.array([w]))[0])
        if abs(pw) < reach:
            out.append((j, 1.0 / np.conj(pw)))
            out.append((j, 1.0 / pw))
    return out


def _enrichment_columns(holes, points, z, side: Side | None = None):
    """Columns log(1 - a/phi_j) symmetrized through the unit circle, real and imaginary."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape + (2 * len(points),), dtype=complex)
    for c, (j, a) in enumerate(points):
        hole = holes[j]
        phi = np.asarray(side.phi) if side is not None and side.hole == j else hole.phi(z)
        u = np.log(1 - a / phi)
        v = np.conj(np.log(1 - a / hole.phi_reflected(z)))
        out[..., 2 * c] = u - v
        out[..., 2 * c + 1] = 1j * (u + v)
    return out


def _enrichment_derivative(holes, points, z):
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape + (2 * len(points),), dtype=complex)
    for c, (j, a) in enumerate(points):
        hole = holes[j]
        phi = hole.phi(z)
        du = a / (phi * (phi - a)) * 2 * phi * phi / (phi * phi - 1) * hole.ds(z)
        zeta = 1.0 / np.conj(z)
        phr = hole.phi_reflected(z)
        dg = a / (phr * (phr - a)) * 2 * phr * phr / (phr * phr - 1) * hole.ds(zeta)
        dv = np.conj(dg) * (-1.0 / z ** 2)
        out[..., 2 * c] = du - dv
        out[..., 2 * c + 1] = 1j * (du + dv)
    return out


class _Potential:
    """Solved representation Re(sum a_k L_k + basis + enrichment) for several data sets."""

    def __init__(self, holes, order, data_fns, enrich=()):
        self.holes = holes
        self.basis = ReflectedBasis(holes, order)
        self.logs = LogTerms(holes)
        self.enrich = list(enrich)
        self.order = order
        rows, rhs = [], []
        for j, hole in enumerate(holes):
            _, z, phi = hole.nodes(node_count(order))
            rows.append(self._real_columns(z, Side(j, phi)))
            rhs.append(np.stack([f(z, j) for f in data_fns], axis=-1))
        sol = solve_least_squares(np.vstack(rows), np.vstack(rhs))
        self.coef = sol
        worst, scale = 0.0, 1.0
        for j, hole in enumerate(holes):
            _, z, phi = hole.nodes(node_count(order), offset=0.0)
            data = np.stack([f(z, j) for f in data_fns], axis=-1)
            val = self._real_columns(z, Side(j, phi)) @ sol - data
            worst = max(worst, float(np.max(np.abs(val))))
            scale = max(scale, float(np.max(np.abs(data))))
        self.residual = worst / scale

    def _real_columns(self, z, side=None):
        parts = [self.basis.columns(z, side).real, self.logs.real_columns(z, side)]
        if self.enrich:
            parts.append(_enrichment_columns(self.holes, self.enrich, z, side).real)
        return np.concatenate(parts, axis=-1)

    @property
    def log_coefficients(self) -> np.ndarray:
        nb = self.basis.ncols
        return self.coef[nb:nb + self.logs.ncols]

    def real(self, z, side=None):
        return self._real_columns(np.asarray(z, dtype=complex), side) @ self.coef

    def complex_value(self, z):
        z = np.asarray(z, dtype=complex)
        parts = [self.basis.columns(z), self.logs.complex_columns(z)]
        if self.enrich:
            parts.append(_enrichment_columns(self.holes, self.enrich, z))
        return np.concatenate(parts, axis=-1) @ self.coef

    def derivative(self, z, side=None):
        z = np.asarray(z, dtype=complex)
        parts = [self.basis.derivative_columns(z, side), self.logs.derivative_columns(z, side)]
        if self.enrich:
            parts.append(_enrichment_derivative(self.holes, self.enrich, z))
        return np.concatenate(parts, axis=-1) @ self.coef


class DomainFunctionSet:
    """Evaluators for one standard domain: harmonic measures, periods, Green functions, Psi.

    Built once by `build_domain_functions`; later Green-function solves for new
    poles are cached internally and do not change any reported value.
    """

    def __init__(self, domain: StandardDomain, order: int, tol: float, max_order: int):
        self.domain = domain
        self.tol = tol
        self.max_order = max_order
        M = domain.moduli
        self.holes = slit_maps(M)
        self._green_cache: dict[complex, _Potential] = {}
        nsl = M.nslits
        if nsl == 0:
            self.truncation_order = 0
            self.collocation_residual = 0.0
            self._pot = None
            self.period_matrix_raw = np.zeros((0, 0))
            self.omega_at_origin = np.zeros(0)
            self._imag_shift = np.zeros(0)
            return
        best = None
        for K in order_schedule(order, max_order):
            pot = self._solve(K)
            if best is None or pot.residual < best.residual:
                best = pot
            if pot.residual <= tol:
                break
        else:
            raise ConvergenceError(f"harmonic-measure residual {best.residual:.3e} > tol {tol:g} "
                                   f"at order {best.order}", best.residual, best.order)
        self._pot = pot
        self.truncation_order = pot.order
        self.collocation_residual = pot.residual
        a = pot.log_coefficients[:, :nsl]  # a[k, j]: coefficient of L_k in W_j
        self.period_matrix_raw = -a
        self.omega_at_origin = pot.real(np.zeros(1, complex))[0, :nsl]
        self._imag_shift = -pot.complex_value(np.zeros(1, complex))[0, :nsl].imag
        self._green_cache[0j] = pot
        if np.linalg.eigvalsh(self.period_matrix).min() <= 0:
            raise DegeneratePeriodsError("period matrix is not positive definite")

    def _solve(self, order):
        return _Potential(self.holes, order, self._data_functions())

    def _data_functions(self):
        nsl = len(self.holes)
        out = []
        for k in range(nsl):
            out.append(_IndicatorData(self.holes, k))
        out.append(_GreenData(0j))
        return out

    @property
    def basis_coefficients(self) -> np.ndarray:
        return np.zeros((0, 0)) if self._pot is None else self._pot.coef

    @property
    def n(self) -> int:
        return self.domain.n

    # harmonic measures --------------------------------------------------
    def harmonic_measure(self, z):
        z = np.asarray(z, dtype=complex)
        nsl = len(self.holes)
        if nsl == 0:
            return np.zeros(z.shape + (0,))
        return self._pot.real(z)[..., :nsl]

    def completion(self, z):
        """R_j(z) = omega_j + i conj. harmonic, principal branches, Im R_j(0) = 0."""
        z = np.asarray(z, dtype=complex)
        nsl = len(self.holes)
        return self._pot.complex_value(z)[..., :nsl] + 1j * self._imag_shift

    def completion_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        nsl = len(self.holes)
        if nsl == 0:
            return np.zeros(z.shape + (0,), complex)
        return self._pot.derivative(z)[..., :nsl]

    def omega_normal_derivative(self, xi):
        """Outward normal derivative of each omega_j at points of the unit circle."""
        xi = np.asarray(xi, dtype=complex)
        return (xi[..., None] * self.completion_derivative(xi)).real

    @property
    def period_matrix(self) -> np.ndarray:
        P = self.period_matrix_raw
        return 0.5 * (P + P.T)

    @property
    def period_asymmetry(self) -> float:
        P = self.period_matrix_raw
        return float(np.max(np.abs(P - P.T))) if P.size else 0.0

    # Green functions ----------------------------------------------------
    def _green_potential(self, w: complex) -> _Potential:
        w = complex(w)
        if w in self._green_cache:
            return self._green_cache[w]
        enrich = _enrichment_points(self.holes, w)
        best = None
        for K in order_schedule(self.truncation_order, self.max_order):
            pot = _Potential(self.holes, K, [_GreenData(w)], enrich)
            if best is None or pot.residual < best.residual:
                best = pot
            if pot.residual <= self.tol:
                break
        else:
            raise ConvergenceError(f"Green residual {best.residual:.3e} > tol at pole {w}",
                                   best.residual, best.order)
        self._green_cache[w] = pot
        return pot

    def _green_regular(self, z, w):
        """Re H(z) for the pole w (column -1 of the cached solve)."""
        if not self.holes:
            return np.zeros(np.shape(z))
        return self._green_potential(w).real(z)[..., -1]

    def green(self, z, w) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        w = complex(w)
        if np.any(np.abs(z - w) < 1e-14):
            raise PoleCollisionError("green called with z == w")
        base = -np.log(np.abs(z - w)) + np.log(np.abs(1 - np.conj(w) * z))
        return base + self._green_regular(z, w)

    def domain_constant(self, w) -> float:
        w = complex(w)
        reg = float(np.asarray(self._green_regular(np.array([w]), w)).ravel()[0]) if self.holes else 0.0
        return -(math.log(1 - abs(w) ** 2) + reg)

    def conformal_radius(self, w) -> float:
        w = complex(w)
        if w == 0:
            return 0.0
        if not self.holes:
            return -math.log(1 - abs(w) ** 2)
        from .canonical import conformal_radius_at
        return conformal_radius_at(self.domain.moduli, w, self.truncation_order, self.tol, self.max_order)

    # half-plane field ---------------------------------------------------
    def psi(self, x: float) -> PsiEvaluator:
        return solve_psi(self.domain.moduli, x, max(DEFAULT_ORDER, self.truncation_order), self.tol,
                         self.max_order)

    def slit_constants_from_periods(self, x: float) -> np.ndarray:
        """-P^{-1} d omega/dn at e^{ix}: an independent route to the slit constants of Psi."""
        if not self.holes:
            return np.zeros(0)
        dn = self.omega_normal_derivative(np.array([np.exp(1j * x)]))[0]
        return -np.linalg.solve(self.period_matrix, dn)


class _IndicatorData:
    """Value 1 on slit k and 0 on the other slits."""

    def __init__(self, holes, k):
        self.k = k

    def __call__(self, z, j):
        return np.full(np.shape(z), 1.0 if j == self.k else 0.0)


class _GreenData:
    """Slit data ln|z - w| - ln|1 - conj(w) z| for the regular part of G(., w)."""

    def __init__(self, w):
        self.w = complex(w)

    def __call__(self, z, j=None):
        return np.log(np.abs(z - self.w)) - np.log(np.abs(1 - np.conj(self.w) * z))


# ---------------------------------------------------------------------------
# Public entry points


def build_domain_functions(D: StandardDomain | Moduli, tol: float = DEFAULT_TOL,
                           K: int = DEFAULT_ORDER, max_order: int = MAX_ORDER) -> DomainFunctionSet:
    """Solve for harmonic measures, periods and G(., 0); the order grows from K until tol."""
    if isinstance(D, Moduli):
        D = StandardDomain(D)
    if not tol > 0:
        raise ValueError("tol must be positive")
    return DomainFunctionSet(D, int(K), float(tol), int(max_order))


def green(fns: DomainFunctionSet, z, w) -> np.ndarray:
    return fns.green(z, w)


def harmonic_measure(fns: DomainFunctionSet, z) -> np.ndarray:
    return fns.harmonic_measure(z)


def period_matrix(fns: DomainFunctionSet) -> np.ndarray:
    return fns.period_matrix


def psi_field(fns: DomainFunctionSet, x: float) -> PsiEvaluator:
    return fns.psi(x)


def drift_coefficient(fns: DomainFunctionSet, x: float) -> float:
    """b(x, M) = -i h(e^{ix}); the discarded real part is logged when it is not negligible."""
    b, err = fns.psi(x).drift()
    if err > 1e-6:
        log.warning("drift has real residual %.2e", err)
    return b


def conformal_radius(fns: DomainFunctionSet, w) -> float:
    return fns.conformal_radius(w)


def domain_constant(fns: DomainFunctionSet, w) -> float:
    return fns.domain_constant(w)
