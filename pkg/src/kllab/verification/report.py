"""Structured experiment results."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class Check:
    """One measured value against its reference, tolerance and provenance."""

    name: str
    measured: float
    reference: float
    tolerance: float
    provenance: str
    residual: float = math.nan
    passed: bool = False
    relative: bool = False
    comparison: str = "abs"

    @classmethod
    def close(cls, name, measured, reference, tolerance, provenance, relative=False) -> "Check":
        measured, reference = float(measured), float(reference)
        res = abs(measured - reference)
        if relative:
            res /= max(abs(reference), 1e-300)
        return cls(name, measured, reference, tolerance, provenance, res, bool(res <= tolerance), relative)

    @classmethod
    def at_most(cls, name, measured, bound, provenance) -> "Check":
        measured = float(measured)
        return cls(name, measured, float(bound), float(bound), provenance, measured,
                   bool(measured <= bound), comparison="le")

    @classmethod
    def at_least(cls, name, measured, bound, provenance) -> "Check":
        measured = float(measured)
        return cls(name, measured, float(bound), float(bound), provenance, measured,
                   bool(measured >= bound), comparison="ge")


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


@dataclass
class ExperimentReport:
    name: str
    parameters: dict
    checks: list[Check] = field(default_factory=list)
    wall_clock: float = 0.0
    extras: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return _plain({"name": self.name, "parameters": self.parameters,
                       "checks": [asdict(c) for c in self.checks], "passed": self.passed,
                       "wall_clock": self.wall_clock, "extras": self.extras})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary_line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        worst = ", ".join(f"{c.name}={c.measured:.3g}" for c in self.checks)
        return f"[{tag}] {self.name}: {worst}"
