"""Monostable (Fisher-KPP) reaction terms and sample-based condition checks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np


@dataclass(frozen=True)
class GrowthFunction:
    """Reaction term ``f(u)`` on ``[0, 1]`` with its linearisation data.

    ``N`` and ``theta`` are the constants of the sub-tangency bound
    ``f'(0) s - N s**(1+theta) <= f(s)``; they cannot be inferred from ``f``
    and must be supplied by whoever builds a non-logistic term.
    """

    func: Callable[[np.ndarray], np.ndarray]
    fprime0: float
    fprime1: float
    N: float
    theta: float
    name: str = "custom"
    # analytic sup of |f'| on [0, 1], when known
    max_slope: Optional[float] = None
    # set for f(u) = a u (1 - u); lets the simulator use the fused kernel
    logistic_rate: Optional[float] = field(default=None, compare=False)

    def eval(self, u):
        return self.func(u)

    def __call__(self, u):
        return self.func(u)

    def max_abs_derivative(self, samples: int = 10_000) -> float:
        """sup |f'(u)| on [0, 1]; analytic when known, else central differences."""
        if self.max_slope is not None:
            return float(self.max_slope)
        s = np.linspace(0.0, 1.0, samples)
        eps = 1e-6
        lo = np.clip(s - eps, 0.0, 1.0)
        hi = np.clip(s + eps, 0.0, 1.0)
        slope = (np.asarray(self.func(hi), float) - np.asarray(self.func(lo), float)) / (hi - lo)
        return float(np.max(np.abs(slope)))


def logistic(a: float) -> GrowthFunction:
    """``f(u) = a u (1 - u)``; the sub-tangency bound holds with equality for N=a, theta=1."""
    if not a > 0:
        raise ValueError(f"logistic growth rate must be positive, got {a!r}")
    a = float(a)

    def f(u):
        return a * u * (1.0 - u)

    return GrowthFunction(func=f, fprime0=a, fprime1=-a, N=a, theta=1.0,
                          name=f"logistic(a={a:g})", max_slope=a, logistic_rate=a)


def zero_growth() -> GrowthFunction:
    """``f = 0``: pure lattice diffusion, used for conservation checks."""
    return GrowthFunction(func=lambda u: 0.0 * np.asarray(u, dtype=float),
                          fprime0=0.0, fprime1=0.0, N=0.0, theta=1.0,
                          name="zero", max_slope=0.0)


@dataclass
class ConditionResult:
    condition: str
    passed: bool
    worst_s: float
    margin: float

    def to_dict(self) -> dict:
        return {"condition": self.condition, "pass": bool(self.passed),
                "worst_s": float(self.worst_s), "margin": float(self.margin)}


@dataclass
class ConditionReport:
    entries: List[ConditionResult]

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, condition: str) -> ConditionResult:
        for e in self.entries:
            if e.condition == condition:
                return e
        raise KeyError(condition)

    def to_json(self) -> str:
        return json.dumps([e.to_dict() for e in self.entries])


ENDPOINTS = "f(0)=0 and f(1)=0"
POSITIVE = "f(s)>0 on (0,1)"
KPP_UPPER = "f(s)<=f'(0)s"
SUBTANGENT = "f'(0)s-N*s^(1+theta)<=f(s)"


def check_kpp(f: GrowthFunction, samples: int = 1001) -> ConditionReport:
    """Evaluate the monostable conditions on a uniform grid of ``samples`` points.

    Each entry carries the worst sample and its margin; a negative margin is a
    violation.  Comparisons allow a relative round-off band of ``1e-12`` so
    that bounds that hold with equality (logistic) are not flagged.
    """
    if samples < 2:
        raise ValueError("check_kpp needs at least 2 samples")
    s = np.linspace(0.0, 1.0, samples)
    fs = np.asarray(f.eval(s), dtype=float) * np.ones_like(s)
    scale = max(1.0, abs(f.fprime0), abs(f.N))
    band = 1e-12 * scale

    entries = []

    ends = np.array([abs(float(f.eval(0.0))), abs(float(f.eval(1.0)))])
    k = int(np.argmax(ends))
    entries.append(ConditionResult(ENDPOINTS, bool(ends.max() <= 1e-14 * scale),
                                   float(k), -float(ends.max())))

    inner = s[1:-1]
    if inner.size:
        vals = fs[1:-1]
        k = int(np.argmin(vals))
        entries.append(ConditionResult(POSITIVE, bool(vals[k] > 0), float(inner[k]),
                                       float(vals[k])))
    else:
        entries.append(ConditionResult(POSITIVE, True, float("nan"), float("inf")))

    slack = f.fprime0 * s - fs
    k = int(np.argmin(slack))
    entries.append(ConditionResult(KPP_UPPER, bool(slack[k] >= -band), float(s[k]),
                                   float(slack[k])))

    slack = fs - (f.fprime0 * s - f.N * s ** (1.0 + f.theta))
    k = int(np.argmin(slack))
    entries.append(ConditionResult(SUBTANGENT, bool(slack[k] >= -band), float(s[k]),
                                   float(slack[k])))
    return ConditionReport(entries)
