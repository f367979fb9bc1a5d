"""Standard domains: the unit disk minus concentric circular slits.

A domain with connectivity n is described by its moduli, the radii m_j and
angular extents [theta_j, theta'_j] of its n-1 slits.  Angles are stored as
unnormalized reals because driving angles wind; comparisons are done modulo
2*pi with [0, 2*pi) as canonical representative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi
NO_SLIT = math.inf


def wrap_angle(theta):
    """Canonical representative of an angle in [0, 2*pi)."""
    return np.mod(theta, TWO_PI)


def _in_range(phi, start, end):
    """True where phi lies in the closed arc [start, end] modulo 2*pi."""
    return wrap_angle(np.asarray(phi) - start) <= (end - start)


@dataclass(frozen=True)
class Moduli:
    """Radii and angular extents of the n-1 slits of a standard domain."""

    m: tuple[float, ...] = ()
    theta: tuple[float, ...] = ()
    theta_prime: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(float(v) for v in self.m))
        object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))
        object.__setattr__(self, "theta_prime", tuple(float(v) for v in self.theta_prime))
        if not len(self.m) == len(self.theta) == len(self.theta_prime):
            raise DomainError("moduli vectors must have equal length")

    @property
    def n(self) -> int:
        return len(self.m) + 1

    @property
    def nslits(self) -> int:
        return len(self.m)

    def as_array(self) -> np.ndarray:
        """State vector (ln m, theta, theta') used by the moduli ODE."""
        return np.concatenate([np.log(self.m), self.theta, self.theta_prime]).astype(float)

    @classmethod
    def from_array(cls, y) -> "Moduli":
        y = np.asarray(y, dtype=float)
        k = y.size // 3
        return cls(tuple(np.exp(y[:k])), tuple(y[k:2 * k]), tuple(y[2 * k:]))

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points m_j e^{i theta_j}, m_j e^{i theta'_j}."""
        m = np.asarray(self.m)
        return m * np.exp(1j * np.asarray(self.theta)), m * np.exp(1j * np.asarray(self.theta_prime))

    def to_dict(self) -> dict:
        return {"n": self.n, "m": list(self.m), "theta": list(self.theta),
                "theta_prime": list(self.theta_prime)}

    @classmethod
    def from_dict(cls, data: dict) -> "Moduli":
        try:
            mod = cls(data.get("m", []), data.get("theta", []), data.get("theta_prime", []))
        except TypeError as exc:
            raise DomainError(f"malformed moduli: {exc}") from exc
        if "n" in data and int(data["n"]) != mod.n:
            raise DomainError(f"n={data['n']} does not match {mod.nslits} slits")
        return mod

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def load(cls, path) -> "Moduli":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def checked(self) -> "Moduli":
        problems = validate_moduli(self)
        if problems:
            raise DomainError("; ".join(problems))
        return self


DISK = Moduli()


def validate_moduli(M: Moduli) -> list[str]:
    """Every violated invariant of M, with the 1-based slit index.  Empty means valid."""
    out = []
    for j, (m, a, b) in enumerate(zip(M.m, M.theta, M.theta_prime), start=1):
        if not all(math.isfinite(v) for v in (m, a, b)):
            out.append(f"slit {j}: non-finite value")
            continue
        if not 0.0 < m < 1.0:
            out.append(f"m_{j} not in (0,1)")
        if not a < b < a + TWO_PI:
            out.append(f"slit {j}: need theta_{j} < theta'_{j} < theta_{j} + 2pi")
    if out:
        return out
    for j in range(M.nslits):
        for k in range(j + 1, M.nslits):
            if abs(M.m[j] - M.m[k]) > 1e-14:
                continue
            if _ranges_overlap(M.theta[j], M.theta_prime[j], M.theta[k], M.theta_prime[k]):
                out.append(f"slits {j + 1} and {k + 1} intersect")
    return out


def _ranges_overlap(a1, b1, a2, b2) -> bool:
    d = wrap_angle(a2 - a1)
    return bool(d <= b1 - a1 or d + (b2 - a2) >= TWO_PI)


def point_arc_distance(z, m, theta, theta_prime):
    """Euclidean distance from points z to the closed arc m e^{i[theta, theta']}."""
    z = np.asarray(z, dtype=complex)
    radial = np.abs(np.abs(z) - m)
    ends = np.minimum(np.abs(z - m * np.exp(1j * theta)), np.abs(z - m * np.exp(1j * theta_prime)))
    inside = _in_range(np.angle(z), theta, theta_prime) & (np.abs(z) > 0)
    return np.where(inside, np.minimum(radial, ends), ends)


def slit_distance(M: Moduli, z):
    """Distance from z to the nearest slit; +inf for the disk."""
    z = np.asarray(z, dtype=complex)
    best = np.full(z.shape, NO_SLIT)
    for m, a, b in zip(M.m, M.theta, M.theta_prime):
        best = np.minimum(best, point_arc_distance(z, m, a, b))
    return best


def min_slit_gap(M: Moduli, x: float) -> float:
    """Distance from the boundary point e^{ix} to the nearest slit."""
    return float(slit_distance(M, np.exp(1j * x)))


def arc_arc_distance(m1, a1, b1, m2, a2, b2) -> float:
    e1 = m1 * np.exp(1j * np.array([a1, b1]))
    e2 = m2 * np.exp(1j * np.array([a2, b2]))
    d = min(point_arc_distance(e1, m2, a2, b2).min(), point_arc_distance(e2, m1, a1, b1).min())
    if _ranges_overlap(a1, b1, a2, b2):
        d = min(d, abs(m1 - m2))
    return float(d)


def slit_separation(M: Moduli) -> float:
    """Smallest distance between two slits or between a slit and the unit circle."""
    if M.nslits == 0:
        return NO_SLIT
    d = min(1.0 - m for m in M.m)
    for j in range(M.nslits):
        for k in range(j + 1, M.nslits):
            d = min(d, arc_arc_distance(M.m[j], M.theta[j], M.theta_prime[j],
                                        M.m[k], M.theta[k], M.theta_prime[k]))
    return d


def random_moduli(rng: np.random.Generator, n: int, min_gap: float = 0.05,
                  m_range=(0.15, 0.9), length_range=(0.3, 2.5), max_tries: int = 10000) -> Moduli:
    """Random valid moduli whose slits keep at least min_gap from each other and the circle."""
    if n == 1:
        return DISK
    for _ in range(max_tries):
        m = rng.uniform(*m_range, size=n - 1)
        start = rng.uniform(0.0, TWO_PI, size=n - 1)
        length = rng.uniform(*length_range, size=n - 1)
        M = Moduli(tuple(m), tuple(start), tuple(start + length))
        if not validate_moduli(M) and slit_separation(M) >= min_gap:
            return M
    raise DomainError("could not draw separated moduli")


@dataclass(frozen=True)
class StandardDomain:
    """Unit disk minus the slits of `moduli`, marked at 0 and at the boundary point 1."""

    moduli: Moduli = DISK
    marked_interior: complex = 0j
    marked_boundary: complex = 1 + 0j

    def __post_init__(self):
        self.moduli.checked()

    @property
    def n(self) -> int:
        return self.moduli.n

    def boundary_distance(self, z):
        z = np.asarray(z, dtype=complex)
        return np.minimum(1.0 - np.abs(z), slit_distance(self.moduli, z))

    def contains(self, z, guard: float = 0.0):
        return self.boundary_distance(z) > guard

    def slit_points(self, j: int, count: int = 64) -> np.ndarray:
        m, a, b = self.moduli.m[j], self.moduli.theta[j], self.moduli.theta_prime[j]
        return m * np.exp(1j * np.linspace(a, b, count))


@dataclass(frozen=True)
class Hull:
    """Closed hull attached to the unit circle, stored as a polyline from its base."""

    points: tuple[complex, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(complex(p) for p in self.points))

    @property
    def empty(self) -> bool:
        return len(self.points) == 0

    @classmethod
    def radial_slit(cls, angle: float, length: float) -> "Hull":
        """Segment from e^{i angle} inward to (1 - length) e^{i angle}."""
        if not 0.0 < length < 1.0:
            raise DomainError("radial slit length must lie in (0, 1)")
        u = np.exp(1j * angle)
        return cls((complex(u), complex((1.0 - length) * u)))

    def radial_params(self) -> tuple[float, float]:
        """(angle, tip radius) for a radial segment; raises otherwise."""
        if len(self.points) < 2:
            raise DomainError("hull is not a radial slit")
        p = np.asarray(self.points)
        ang = np.angle(p[0])
        r = np.abs(p)
        if abs(r[0] - 1.0) > 1e-12 or np.max(np.abs(np.angle(p * np.exp(-1j * ang)))) > 1e-12:
            raise DomainError("only radial slits attached to the unit circle are supported")
        return float(ang), float(r.min())

    def distance(self, z):
        """Distance from z to the polyline."""
        z = np.asarray(z, dtype=complex)
        p = np.asarray(self.points)
        if p.size == 0:
            return np.full(z.shape, math.inf)
        if p.size == 1:
            return np.abs(z - p[0])
        best = np.full(z.shape, math.inf)
        for a, b in zip(p[:-1], p[1:]):
            d = b - a
            t = np.clip(((z - a) * np.conj(d)).real / max(abs(d) ** 2, 1e-300), 0.0, 1.0)
            best = np.minimum(best, np.abs(z - (a + t * d)))
        return best

    def self_intersects(self) -> bool:
        """Cheap scan for crossings between non-adjacent segments."""
        p = np.asarray(self.points)
        segs = list(zip(p[:-1], p[1:]))

        def cross(u, v):
            return (np.conj(u) * v).imag

        for i in range(len(segs)):
            for k in range(i + 2, len(segs)):
                a, b = segs[i]
                c, d = segs[k]
                d1, d2 = cross(b - a, c - a), cross(b - a, d - a)
                d3, d4 = cross(d - c, a - c), cross(d - c, b - c)
                if d1 * d2 < 0 and d3 * d4 < 0:
                    return True
        return False

    def to_dict(self) -> dict:
        return {"points": [[p.real, p.imag] for p in self.points]}

    @classmethod
    def from_dict(cls, data: dict) -> "Hull":
        return cls(tuple(complex(x, y) for x, y in data.get("points", [])))
