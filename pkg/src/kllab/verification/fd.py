"""Polar finite-volume Laplace solver, independent of the collocation code.

The grid has an origin node, rings at radii that include every slit radius
exactly, and a uniform angular mesh.  Slit nodes and the outer ring carry
Dirichlet data.  The scheme is the symmetric five-point finite-volume stencil
on the polar mesh, second order on smooth data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import spsolve

from ..domain import StandardDomain

BoundaryData = Callable[[np.ndarray, int], np.ndarray]


class SingularSystem(ArithmeticError):
    """The discrete Dirichlet problem has no unique solution on this grid."""


def radial_nodes(radii_required, nr: int) -> np.ndarray:
    """0 = r_0 < ... < r_nr = 1, near-uniform, with each required radius snapped onto a node."""
    r = np.linspace(0.0, 1.0, nr + 1)
    for m in sorted(set(float(x) for x in radii_required)):
        i = int(np.argmin(np.abs(r[1:-1] - m))) + 1
        # stretch the two neighbouring intervals linearly to keep the mesh monotone
        lo, hi = r[i - 1], r[i + 1]
        left = np.linspace(0.0, 1.0, i + 1)
        r[:i + 1] = r[0] + (m - r[0]) * left if i > 1 else np.array([0.0, m])
        right = np.linspace(0.0, 1.0, nr - i + 1)
        r[i:] = m + (1.0 - m) * right
        del lo, hi
    return r


@dataclass
class FdSolution:
    r: np.ndarray
    phi: np.ndarray
    u: np.ndarray         # (nr+1, nphi); row 0 is the origin value repeated
    weights: sp.csr_matrix

    @cached_property
    def _interp(self):
        pad = 3
        phi = np.concatenate([self.phi[-pad:] - 2 * math.pi, self.phi, self.phi[:pad] + 2 * math.pi])
        u = np.concatenate([self.u[:, -pad:], self.u, self.u[:, :pad]], axis=1)
        return RegularGridInterpolator((self.r, phi), u, method="cubic")

    def at(self, z):
        """Cubic interpolation in (r, phi), so that the scheme error dominates off the grid."""
        z = np.asarray(z, dtype=complex)
        pts = np.column_stack([np.abs(z).ravel(), np.mod(np.angle(z).ravel(), 2 * math.pi)])
        return self._interp(pts).reshape(z.shape)

    def energy(self, other: "FdSolution | None" = None) -> float:
        """Discrete Dirichlet form sum over edges w (u_a - u_b)(v_a - v_b)."""
        v = self if other is None else other
        a = _flatten(self.u)
        b = _flatten(v.u)
        W = self.weights.tocoo()
        return float(0.5 * np.sum(W.data * (a[W.row] - a[W.col]) * (b[W.row] - b[W.col])))


def _flatten(u):
    return np.concatenate([[u[0, 0]], u[1:].ravel()])


def _edge_weights(r, nphi):
    """Conductances of the polar finite-volume mesh; node 0 is the origin."""
    nr = r.size - 1
    dphi = 2 * math.pi / nphi
    idx = lambda i, j: 1 + (i - 1) * nphi + (j % nphi)
    rows, cols, w = [], [], []
    half = 0.5 * (r[1:] + r[:-1])          # r_{i+1/2}
    for j in range(nphi):
        rows.append(0)
        cols.append(idx(1, j))
        w.append(half[0] * dphi / (r[1] - r[0]))
    for i in range(1, nr + 1):
        h_lo = r[i] - r[i - 1]
        h_hi = r[i + 1] - r[i] if i < nr else 0.0
        width = 0.5 * (h_lo + h_hi)
        for j in range(nphi):
            a = idx(i, j)
            rows.append(a)
            cols.append(idx(i, j + 1))
            w.append(width / (r[i] * dphi))
            if i < nr:
                rows.append(a)
                cols.append(idx(i + 1, j))
                w.append(half[i] * dphi / h_hi)
    n = 1 + nr * nphi
    W = sp.coo_matrix((w, (rows, cols)), shape=(n, n)).tocsr()
    return W + W.T


def fd_laplace_oracle(D: StandardDomain, data: BoundaryData, nr: int = 64, nphi: int = 256) -> FdSolution:
    """Dirichlet solve with data(z, 0) on the circle and data(z, k) on slit k >= 1."""
    if nr < 64 or nphi < 256:
        raise ValueError("resolution must be at least 64 radial x 256 angular")
    M = D.moduli
    r = radial_nodes(M.m, nr)
    if np.any(np.diff(r) <= 0):
        raise SingularSystem("degenerate radial mesh")
    phi = 2 * math.pi * np.arange(nphi) / nphi
    W = _edge_weights(r, nphi)
    n = W.shape[0]
    values = np.full(n, np.nan)
    ring = lambda i: 1 + (i - 1) * nphi + np.arange(nphi)
    outer = ring(nr)
    values[outer] = data(np.exp(1j * phi), 0)
    for k, (m, a, b) in enumerate(zip(M.m, M.theta, M.theta_prime), start=1):
        i = int(np.argmin(np.abs(r - m)))
        rel = np.mod(phi - a, 2 * math.pi)
        on = rel <= (b - a) + 1e-12
        if not on.any():
            raise SingularSystem("slit shorter than the angular mesh")
        nodes = ring(i)[on]
        values[nodes] = data(m * np.exp(1j * phi[on]), k)
    fixed = np.isfinite(values)
    free = ~fixed
    L = sp.diags(np.asarray(W.sum(axis=1)).ravel()) - W
    L = L.tocsr()
    A = L[free][:, free].tocsc()
    rhs = -L[free][:, fixed] @ values[fixed]
    sol = spsolve(A, rhs)
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("singular system")
    values[free] = sol
    u = np.empty((nr + 1, nphi))
    u[0] = values[0]
    u[1:] = values[1:].reshape(nr, nphi)
    return FdSolution(r, phi, u, W)


def fd_green(D: StandardDomain, w: complex, nr: int = 64, nphi: int = 256):
    """Regular part u = G(., w) + ln|. - w|, solved with data ln|zeta - w|; returns (u, G)."""
    w = complex(w)
    sol = fd_laplace_oracle(D, lambda z, k: np.log(np.abs(z - w)), nr, nphi)

    def G(z):
        z = np.asarray(z, dtype=complex)
        return sol.at(z) - np.log(np.abs(z - w))

    return sol, G


def fd_harmonic_measures(D: StandardDomain, nr: int = 64, nphi: int = 256) -> list[FdSolution]:
    """omega_k for each slit k (1 on slit k, 0 on every other component)."""
    out = []
    for k in range(1, D.moduli.n):
        out.append(fd_laplace_oracle(D, lambda z, c, k=k: np.full(z.shape, float(c == k)), nr, nphi))
    return out


def fd_period_matrix(D: StandardDomain, nr: int = 64, nphi: int = 256) -> np.ndarray:
    """P_kl = (1/2pi) x Dirichlet form of (omega_k, omega_l); equals the conjugate periods."""
    oms = fd_harmonic_measures(D, nr, nphi)
    n = len(oms)
    P = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            P[a, b] = oms[a].energy(oms[b]) / (2 * math.pi)
    return P


def richardson_first_order(coarse, fine):
    """Limit estimate from values at mesh sizes h and h/2 with O(h) error."""
    return 2.0 * np.asarray(fine) - np.asarray(coarse)


def fd_green_values(D: StandardDomain, z, w: complex, nr: int = 128, nphi: int = 512,
                    extrapolate: bool = True):
    """G(z, w) from the grid solve; with `extrapolate`, combine (nr, nphi) and (2nr, 2nphi).

    Slit tips limit the global error to first order, so the extrapolation is first order.
    """
    z = np.asarray(z, dtype=complex)
    _, G1 = fd_green(D, w, nr, nphi)
    if not extrapolate:
        return G1(z)
    _, G2 = fd_green(D, w, 2 * nr, 2 * nphi)
    return richardson_first_order(G1(z), G2(z))


def fd_period_matrix_extrapolated(D: StandardDomain, nr: int = 64, nphi: int = 256) -> np.ndarray:
    return richardson_first_order(fd_period_matrix(D, nr, nphi), fd_period_matrix(D, 2 * nr, 2 * nphi))
