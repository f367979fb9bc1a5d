"""Closed-form radial slit maps in the unit disk."""

from __future__ import annotations

import cmath
import math

from ..errors import BranchFailure


def radial_loewner_closed_form(t: float, z: complex, xi: complex = -1.0, steps: int = 0,
                               tol: float = 1e-15, maxiter: int = 60) -> complex:
    """g_t(z) for the constant driver xi: (g/xi)/(1+g/xi)^2 = e^t (z/xi)/(1+z/xi)^2.

    With xi = -1 this is g/(1-g)^2 = e^t z/(1-z)^2.  The root is followed from
    g = z at time 0 by Newton continuation in t, which selects the branch
    inside the disk.
    """
    z = complex(z)
    xi = complex(xi)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if z == 0 or t == 0:
        return z
    u = z / xi

    def F(v, s):
        return v / (1 + v) ** 2 - math.exp(s) * u / (1 + u) ** 2

    def dF(v):
        return (1 - v) / (1 + v) ** 3

    n = steps or max(8, int(math.ceil(16 * t)))
    v = u
    for k in range(1, n + 1):
        s = t * k / n
        for _ in range(maxiter):
            d = dF(v)
            if abs(d) < 1e-12:
                raise BranchFailure(f"derivative vanishes at g={v * xi!r}, near the slit tip")
            step = F(v, s) / d
            v -= step
            if abs(step) <= tol * max(1.0, abs(v)):
                break
        else:
            raise BranchFailure(f"Newton failed at t={s:g} for z={z!r}")
        if abs(v) > 1 + 1e-12 or not cmath.isfinite(v):
            raise BranchFailure(f"branch left the disk at t={s:g} for z={z!r}")
    return v * xi


def implicit_residual(t: float, z: complex, g: complex, xi: complex = -1.0) -> float:
    """|LHS - RHS| of the defining relation, relative to the RHS scale."""
    u, v = complex(z) / xi, complex(g) / xi
    rhs = math.exp(t) * u / (1 + u) ** 2
    return abs(v / (1 + v) ** 2 - rhs) / max(abs(rhs), 1e-300)


def slit_tip_radius(t: float) -> float:
    """Tip radius r of the slit grown in time t: (1+r)^2/(4r) = e^t."""
    q = math.exp(t)
    return 2 * q - 1 - 2 * math.sqrt(q * (q - 1))


def radial_slit_map_derivative_sq(s: float) -> float:
    """|Phi'(xi_opposite)|^2 for the disk minus a radial slit of length s, at the diametrically
    opposite boundary point: 4(1-s)/(2-s)^2."""
    return 4 * (1 - s) / (2 - s) ** 2
