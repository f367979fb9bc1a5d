"""Monte Carlo harmonic measure by walk on spheres.

Each walker jumps to a uniform point on the largest circle about its position
that stays inside the domain, so it can never step across a slit.  A walker
within `eps` of the boundary is absorbed by the nearest component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..domain import StandardDomain, point_arc_distance


@dataclass
class HittingFrequencies:
    """Exit frequencies per component: index 0 is the unit circle, k >= 1 slit k."""

    counts: np.ndarray
    walks: int
    eps: float

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.walks

    @property
    def slits(self) -> np.ndarray:
        return self.frequencies[1:]

    @property
    def standard_errors(self) -> np.ndarray:
        p = self.frequencies
        return np.sqrt(p * (1 - p) / self.walks)


def _distances(M, z):
    d = [1.0 - np.abs(z)]
    for m, a, b in zip(M.m, M.theta, M.theta_prime):
        d.append(point_arc_distance(z, m, a, b))
    return np.stack(d)


def brownian_harmonic_measure(D: StandardDomain, z: complex, walks: int, seed: int = 0,
                              eps: float = 1e-6, max_steps: int = 100000,
                              batch: int = 200000) -> HittingFrequencies:
    """Exit-component frequencies for Brownian motion started at z."""
    M = D.moduli
    if not D.contains(np.array([complex(z)]))[0]:
        raise ValueError("start point must lie in the domain")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0xB0])))
    counts = np.zeros(M.n, dtype=np.int64)
    done = 0
    while done < walks:
        n = min(batch, walks - done)
        pos = np.full(n, complex(z))
        alive = np.arange(n)
        for _ in range(max_steps):
            if alive.size == 0:
                break
            d = _distances(M, pos[alive])
            near = d.min(axis=0)
            stop = near < eps
            if stop.any():
                comp = np.argmin(d[:, stop], axis=0)
                counts += np.bincount(comp, minlength=M.n)
                alive = alive[~stop]
                near = near[~stop]
            ang = rng.uniform(0, 2 * math.pi, alive.size)
            pos[alive] += near * np.exp(1j * ang)
        else:
            raise RuntimeError("walks did not terminate")
        done += n
    return HittingFrequencies(counts, walks, eps)
