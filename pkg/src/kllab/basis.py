"""Reflection-symmetrized arc bases for least-squares collocation.

For each hole (slit arc, or a hull joined with its mirror image) the basis
consists of phi^{-k}, k = 1..K, in the hole's own opening coordinate, combined
as f(z) - conj(f(1/conj z)) so that the real part vanishes on the unit circle.
A hole that is its own mirror image needs only half of the columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .geometry import ArcMap, joukowski_exterior


def _inverse_powers(phi, K):
    """Stack phi^{-k}, k = 1..K along a new last axis."""
    inv = 1.0 / np.asarray(phi, dtype=complex)
    out = np.empty(inv.shape + (K,), dtype=complex)
    if K == 0:
        return out
    out[..., 0] = inv
    for k in range(1, K):
        out[..., k] = out[..., k - 1] * inv
    return out


def _dphi_ds(phi):
    return 2.0 * phi * phi / (phi * phi - 1.0)


@dataclass(frozen=True)
class Side:
    """Exact opening coordinates for points lying on hole `hole`."""

    hole: int
    phi: np.ndarray


class ReflectedBasis:
    """Complex column functions e_c(z) whose real combinations are the unknowns."""

    def __init__(self, holes: Sequence[ArcMap], order: int):
        self.holes = list(holes)
        self.order = int(order)
        self.widths = [self.order if h.self_symmetric else 2 * self.order for h in self.holes]
        self.offsets = np.concatenate([[0], np.cumsum(self.widths)]).astype(int)
        self.ncols = int(self.offsets[-1])

    def _hole_phi(self, j, z, side):
        if side is not None and side.hole == j:
            return np.asarray(side.phi, dtype=complex)
        return self.holes[j].phi(z)

    def columns(self, z, side: Side | None = None) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape + (self.ncols,), dtype=complex)
        K = self.order
        for j, hole in enumerate(self.holes):
            lo = self.offsets[j]
            u = _inverse_powers(self._hole_phi(j, z, side), K)
            if hole.self_symmetric:
                out[..., lo:lo + K] = u * _symmetric_phase(K)
                continue
            v = np.conj(_inverse_powers(hole.phi_reflected(z), K))
            out[..., lo:lo + K] = u - v
            out[..., lo + K:lo + 2 * K] = 1j * (u + v)
        return out

    def derivative_columns(self, z, side: Side | None = None) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if side is None and np.any(z == 0):
            # the reflected columns are analytic at 0 but evaluated through 1/conj(z);
            # use the mean of the derivative over a small circle (exact for analytic columns)
            ring = 1e-2 * np.exp(2j * np.pi * (np.arange(32) + 0.5) / 32)
            at0 = self.derivative_columns(ring).mean(axis=0)
            out = self.derivative_columns(np.where(z == 0, ring[0], z))
            out[z == 0] = at0
            return out
        out = np.empty(z.shape + (self.ncols,), dtype=complex)
        K = self.order
        k = np.arange(1, K + 1)
        for j, hole in enumerate(self.holes):
            lo = self.offsets[j]
            phi = self._hole_phi(j, z, side)
            dphi = (_dphi_ds(phi) * hole.ds(z))[..., None]
            du = -k * _inverse_powers(phi, K) / phi[..., None] * dphi
            if hole.self_symmetric:
                out[..., lo:lo + K] = du * _symmetric_phase(K)
                continue
            zeta = 1.0 / np.conj(z)
            phr = hole.phi_reflected(z)
            dphr = (_dphi_ds(phr) * hole.ds(zeta))[..., None]
            dg = -k * _inverse_powers(phr, K) / phr[..., None] * dphr
            dv = np.conj(dg) * (-1.0 / z[..., None] ** 2)
            out[..., lo:lo + K] = du - dv
            out[..., lo + K:lo + 2 * K] = 1j * (du + dv)
        return out


def _symmetric_phase(K):
    k = np.arange(1, K + 1)
    return np.where(k % 2 == 1, 1.0 + 0j, 1j)


class LogTerms:
    """One multivalued column per circular slit, with period 2*pi*i around it.

    L(z) = log(phi(z) (z - p)) - log(conj(phi(1/conj z)) (1 - conj(p) z)),
    p the Mobius pole of the arc.  Re L vanishes on the unit circle and is
    smooth on the slit; only Re L and L' are single-valued.
    """

    def __init__(self, holes: Sequence[ArcMap]):
        self.holes = list(holes)
        self.ncols = len(self.holes)

    def real_columns(self, z, side: Side | None = None) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape + (self.ncols,))
        for j, hole in enumerate(self.holes):
            p = hole.pole
            phi = np.asarray(side.phi) if side is not None and side.hole == j else hole.phi(z)
            out[..., j] = (np.log(np.abs(phi)) + np.log(np.abs(z - p))
                           - np.log(np.abs(hole.phi_reflected(z))) - np.log(np.abs(1 - np.conj(p) * z)))
        return out

    def complex_columns(self, z) -> np.ndarray:
        """Principal-branch values; the imaginary part jumps across branch cuts."""
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape + (self.ncols,), dtype=complex)
        for j, hole in enumerate(self.holes):
            p = hole.pole
            out[..., j] = (np.log(hole.phi(z) * (z - p))
                           - np.log(np.conj(hole.phi_reflected(z)) * (1 - np.conj(p) * z)))
        return out

    def derivative_columns(self, z, side: Side | None = None) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if side is None and np.any(z == 0):
            # the reflected columns are analytic at 0 but evaluated through 1/conj(z);
            # use the mean of the derivative over a small circle (exact for analytic columns)
            ring = 1e-2 * np.exp(2j * np.pi * (np.arange(32) + 0.5) / 32)
            at0 = self.derivative_columns(ring).mean(axis=0)
            out = self.derivative_columns(np.where(z == 0, ring[0], z))
            out[z == 0] = at0
            return out
        out = np.empty(z.shape + (self.ncols,), dtype=complex)
        for j, hole in enumerate(self.holes):
            p = hole.pole
            phi = np.asarray(side.phi) if side is not None and side.hole == j else hole.phi(z)
            term = _dphi_ds(phi) * hole.ds(z) / phi
            zeta = 1.0 / np.conj(z)
            phr = hole.phi_reflected(z)
            refl = np.conj(_dphi_ds(phr) * hole.ds(zeta) / phr) / z ** 2
            out[..., j] = term + 1.0 / (z - p) + refl + np.conj(p) / (1 - np.conj(p) * z)
        return out


def solve_least_squares(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Column-scaled least squares; rhs may hold several right-hand sides."""
    scale = np.linalg.norm(matrix, axis=0)
    scale[scale == 0] = 1.0
    sol, *_ = scipy.linalg.lstsq(matrix / scale, rhs, lapack_driver="gelsy", check_finite=False)
    return (sol.T / scale).T


def node_count(order: int, self_symmetric: bool = False) -> int:
    """Collocation nodes per hole for a given basis order (twice oversampled)."""
    return 4 * order + 16


__all__ = ["ReflectedBasis", "LogTerms", "Side", "solve_least_squares", "node_count",
           "joukowski_exterior"]
