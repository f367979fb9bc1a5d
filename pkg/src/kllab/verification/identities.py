"""Limit identity for the boundary kernel of a conjugated Loewner map.

For phi analytic near theta with phi'(theta) != 0,

    2 phi'(theta)^2/(phi(z) - phi(theta)) - 2 phi'(z)/(z - theta) -> -3 phi''(theta)

as z -> theta.  The bracket is sampled along z = theta + h and extrapolated
to h = 0 with a Richardson (Neville) table.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..canonical import CanonicalMap
from .report import Check, ExperimentReport


@dataclass(frozen=True)
class AnalyticMap:
    name: str
    f: Callable[[complex], complex]
    df: Callable[[complex], complex]
    d2f: Callable[[complex], complex]


IDENTITY = AnalyticMap("z", lambda z: z, lambda z: 1.0 + 0 * z, lambda z: 0 * z)
EXP = AnalyticMap("exp(z)", np.exp, np.exp, np.exp)
POLE = AnalyticMap("1/(2-z)", lambda z: 1 / (2 - z), lambda z: 1 / (2 - z) ** 2, lambda z: 2 / (2 - z) ** 3)


def boundary_angle_map(cm: CanonicalMap, step: float = 1e-4) -> AnalyticMap:
    """phi(z) = -i log Phi(e^{iz}) for a canonical map; phi'' by central differences of phi'."""

    def f(z):
        return -1j * cm.log_map(np.exp(1j * np.asarray(z, dtype=complex)))

    def df(z):
        w = np.exp(1j * np.asarray(z, dtype=complex))
        return w * cm.derivative(w) / cm(w)

    def d2f(z):
        return (df(z + step) - df(z - step)) / (2 * step)

    return AnalyticMap("canonical", f, df, d2f)


def bracket(phi: AnalyticMap, theta: float, h):
    h = np.asarray(h, dtype=float)
    z = theta + h
    num = phi.f(z) - phi.f(np.array(theta))
    return 2 * phi.df(np.array(theta)) ** 2 / num - 2 * phi.df(z) / h


def richardson(h, values) -> tuple[float, float]:
    """Polynomial extrapolation to h = 0 (Neville); returns (limit, last correction)."""
    h = np.asarray(h, dtype=float)
    T = [np.asarray(values, dtype=complex)]
    for k in range(1, h.size):
        prev = T[-1]
        T.append((h[k:] * prev[:-1] - h[:-k] * prev[1:]) / (h[k:] - h[:-k]))
    return complex(T[-1][0]), float(abs(T[-1][0] - T[-2][-1]))


def minus_three_phi_identity(phi: AnalyticMap, theta0: float = 0.0, h_list=None,
                             tol: float = 1e-6, provenance: str = "TRIVIAL: Taylor expansion") -> ExperimentReport:
    t0 = time.perf_counter()
    if h_list is None:
        h_list = 0.04 * 0.5 ** np.arange(5)
    h = np.asarray(h_list, dtype=float)
    if abs(complex(phi.df(np.array(theta0)))) == 0:
        raise ValueError("phi'(theta0) must not vanish")
    vals = bracket(phi, theta0, h)
    lim, corr = richardson(h, vals)
    ref = complex(-3 * phi.d2f(np.array(theta0)))
    err = abs(lim - ref)
    chk = Check(f"limit[{phi.name}]", lim.real, ref.real, tol, provenance, err, bool(err <= tol))
    params = {"map": phi.name, "theta0": theta0, "h": h.tolist()}
    extras = {"limit": [lim.real, lim.imag], "reference": [ref.real, ref.imag], "samples": [[v.real, v.imag] for v in vals],
              "richardson_correction": corr}
    return ExperimentReport("minus_three_phi", params, [chk], time.perf_counter() - t0, extras)
