"""Arc maps: a Mobius map sends a circular arc or segment onto [-1, 1], and the
exterior inverse Joukowski map then opens its complement onto |phi| > 1.

Collocation nodes sit at phi = e^{i alpha} on both sides of the arc, which
clusters them at the endpoints like Chebyshev points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def joukowski_exterior(s):
    """Inverse of s = (phi + 1/phi)/2 with |phi| >= 1."""
    return s + np.sqrt(s - 1.0) * np.sqrt(s + 1.0)


@dataclass(frozen=True)
class ArcMap:
    """s = (A z + B)/(C z + D) maps the arc onto [-1, 1], start to -1 and end to +1.

    `center`, `radius` and `start`/`end` describe the arc for geometric queries;
    for a segment `radius` is inf and the endpoints are `p0`, `p1`.
    """

    A: complex
    B: complex
    C: complex
    D: complex
    p0: complex
    p1: complex
    center: complex = 0j
    radius: float = math.inf
    start: float = 0.0
    end: float = 0.0
    self_symmetric: bool = False

    @classmethod
    def circular(cls, center: complex, radius: float, start: float, end: float) -> "ArcMap":
        """Counterclockwise arc center + radius e^{i[start, end]}."""
        mu = 0.5 * (start + end)
        half = 0.5 * (end - start)
        tau = math.tan(0.5 * half)
        rot = radius * np.exp(1j * mu)
        A, B = -1j, 1j * (rot + center)
        C, D = tau, tau * (rot - center)
        p0 = center + radius * np.exp(1j * start)
        p1 = center + radius * np.exp(1j * end)
        return cls(complex(A), complex(B), complex(C), complex(D), complex(p0), complex(p1),
                   complex(center), float(radius), float(start), float(end))

    @classmethod
    def concentric(cls, m: float, theta: float, theta_prime: float) -> "ArcMap":
        return cls.circular(0j, m, theta, theta_prime)

    @classmethod
    def radial_through_circle(cls, angle: float, r_tip: float) -> "ArcMap":
        """Segment r_tip e^{ia} .. e^{ia}/r_tip, a hull and its reflection in one piece.

        Uses s = (w-1)/((w+1)k), w = z e^{-ia}, so that reflection in the unit
        circle acts as s -> -conj(s).
        """
        k = (1.0 - r_tip) / (1.0 + r_tip)
        e = np.exp(-1j * angle)
        p0 = r_tip * np.exp(1j * angle)
        p1 = np.exp(1j * angle) / r_tip
        return cls(complex(e), -1 + 0j, complex(k * e), complex(k), complex(p0), complex(p1),
                   self_symmetric=True)

    @classmethod
    def through_points(cls, z0: complex, z1: complex, z2: complex) -> "ArcMap":
        """Circular arc from z0 through z1 to z2 (any orientation)."""
        a, b, c = complex(z0), complex(z1), complex(z2)
        d = 2 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
        if abs(d) < 1e-300:
            raise ValueError("collinear points")
        ux = (abs(a) ** 2 * (b.imag - c.imag) + abs(b) ** 2 * (c.imag - a.imag)
              + abs(c) ** 2 * (a.imag - b.imag)) / d
        uy = (abs(a) ** 2 * (c.real - b.real) + abs(b) ** 2 * (a.real - c.real)
              + abs(c) ** 2 * (b.real - a.real)) / d
        cen = complex(ux, uy)
        R = abs(a - cen)
        ta, tb, tc = (np.angle(p - cen) for p in (a, b, c))
        # counterclockwise from a: does it reach b before c?
        db = (tb - ta) % (2 * math.pi)
        dc = (tc - ta) % (2 * math.pi)
        if db <= dc:
            return cls.circular(cen, R, ta, ta + dc)
        return cls.circular(cen, R, tc, tc + (2 * math.pi - dc))

    @property
    def pole(self) -> complex:
        """Point mapped to s = infinity (the far point of the arc's circle)."""
        if self.C == 0:
            return complex(math.inf)
        return -self.D / self.C

    def s(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.A * z + self.B) / (self.C * z + self.D)

    def s_reflected(self, z):
        """s(1/conj z), finite at z = 0."""
        zc = np.conj(np.asarray(z, dtype=complex))
        return (self.A + self.B * zc) / (self.C + self.D * zc)

    def ds(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.A * self.D - self.B * self.C) / (self.C * z + self.D) ** 2

    def z_of_s(self, s):
        s = np.asarray(s, dtype=complex)
        return (self.D * s - self.B) / (self.A - self.C * s)

    def phi(self, z):
        return joukowski_exterior(self.s(z))

    def phi_reflected(self, z):
        return joukowski_exterior(self.s_reflected(z))

    def nodes(self, count: int, offset: float = 0.5):
        """Two-sided boundary nodes: alpha, points z and exact phi = e^{i alpha}."""
        alpha = 2 * math.pi * (np.arange(count) + offset) / count
        z = self.z_of_s(np.cos(alpha))
        return alpha, z, np.exp(1j * alpha)

    def point_distance(self, z):
        """Euclidean distance from z to the arc."""
        z = np.asarray(z, dtype=complex)
        if math.isinf(self.radius):
            d = self.p1 - self.p0
            t = np.clip(((z - self.p0) * np.conj(d)).real / abs(d) ** 2, 0, 1)
            return np.abs(z - (self.p0 + t * d))
        ang = np.mod(np.angle(z - self.center) - self.start, 2 * math.pi)
        inside = ang <= self.end - self.start
        ends = np.minimum(np.abs(z - self.p0), np.abs(z - self.p1))
        return np.where(inside, np.abs(np.abs(z - self.center) - self.radius), ends)
