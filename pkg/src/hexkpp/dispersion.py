"""Dispersion relation, minimal wave speed and decay exponents on the hexagonal lattice.

For a direction ``alpha`` with unit vector ``(kappa, sigma)`` the three lattice
projections are

    d1 = kappa,  d2 = kappa/2 + (sqrt3/2) sigma,  d3 = kappa/2 - (sqrt3/2) sigma

and the linearised growth of ``exp(lambda * xi)`` is

    g(lambda) = (1/3) sum_m cosh(d_m lambda) - 1 + f'(0).

The minimal speed is ``c* = inf_{lambda>0} g(lambda)/lambda``.  Because g is
convex, the minimiser is the unique root of ``h(lambda) = lambda g'(lambda) -
g(lambda)``, which is strictly increasing; it is bracketed by doubling and
bisected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

SQRT3_2 = math.sqrt(3.0) / 2.0
TWO_PI = 2.0 * math.pi

LAMBDA_MAX_CAP = 500.0
TANGENT_BAND = 1e-9


class BracketError(RuntimeError):
    """Root could not be bracketed below the cap."""

    def __init__(self, message: str, lambda_max: float):
        super().__init__(message)
        self.lambda_max = lambda_max


def normalize_angle(alpha: float) -> float:
    a = math.fmod(float(alpha), TWO_PI)
    if a < 0.0:
        a += TWO_PI
    if a >= TWO_PI:
        a = 0.0
    return a


@dataclass(frozen=True)
class Direction:
    alpha: float
    kappa: float
    sigma: float
    delta: Tuple[float, float, float]

    @classmethod
    def from_angle(cls, alpha: float) -> "Direction":
        a = normalize_angle(alpha)
        k, s = math.cos(a), math.sin(a)
        return cls(a, k, s, (k, 0.5 * k + SQRT3_2 * s, 0.5 * k - SQRT3_2 * s))

    def fundamental(self) -> "Direction":
        """Equivalent direction in [0, pi/6] (same dispersion relation)."""
        a = math.fmod(self.alpha, math.pi / 3.0)
        if a > math.pi / 6.0:
            a = math.pi / 3.0 - a
        return Direction.from_angle(a)


def as_direction(d) -> Direction:
    return d if isinstance(d, Direction) else Direction.from_angle(d)


@dataclass(frozen=True)
class DispersionResult:
    c_star: float
    lambda_star: float
    alpha: float


@dataclass(frozen=True)
class RootClassification:
    """One of ``TwoRoots`` (lambda1 < lambda2), ``Tangent`` or ``NoRoot``."""

    variant: str
    c: float
    c_star: float
    lambda_star: float
    lambda1: Optional[float] = None
    lambda2: Optional[float] = None


# ---------------------------------------------------------------------------
# g and its lambda derivatives
# ---------------------------------------------------------------------------

def g_value(lam, direction, fprime0: float):
    """``(1/3) sum cosh(d_m lambda) - 1 + f'(0)``; accepts scalar or array lambda."""
    d = as_direction(direction).delta
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr <= 0):
        raise ValueError("decay rate lambda must be positive")
    if lam_arr.ndim == 0:
        x = float(lam_arr)
        return (math.cosh(d[0] * x) + math.cosh(d[1] * x) + math.cosh(d[2] * x)) / 3.0 \
            - 1.0 + fprime0
    return (np.cosh(d[0] * lam_arr) + np.cosh(d[1] * lam_arr)
            + np.cosh(d[2] * lam_arr)) / 3.0 - 1.0 + fprime0


def g_value_exponential(lam, direction, fprime0: float):
    """Six-exponential form ``(1/6)(sum_m e^{d_m lam} + e^{-d_m lam} - 6) + f'(0)``."""
    d = as_direction(direction).delta
    lam = np.asarray(lam, dtype=float)
    total = sum(np.exp(dm * lam) + np.exp(-dm * lam) for dm in d)
    return (total - 6.0) / 6.0 + fprime0


def _g_scalar(x: float, d, fprime0: float) -> float:
    return (math.cosh(d[0] * x) + math.cosh(d[1] * x) + math.cosh(d[2] * x)) / 3.0 \
        - 1.0 + fprime0


def _gp_scalar(x: float, d) -> float:
    return (d[0] * math.sinh(d[0] * x) + d[1] * math.sinh(d[1] * x)
            + d[2] * math.sinh(d[2] * x)) / 3.0


def _gpp_scalar(x: float, d) -> float:
    return (d[0] ** 2 * math.cosh(d[0] * x) + d[1] ** 2 * math.cosh(d[1] * x)
            + d[2] ** 2 * math.cosh(d[2] * x)) / 3.0


def g_prime(lam: float, direction) -> float:
    return _gp_scalar(float(lam), as_direction(direction).delta)


def big_g(c: float, lam, direction, fprime0: float):
    """``G(c, lambda) = c lambda - g(lambda)``."""
    if np.ndim(lam) == 0:
        return c * float(lam) - g_value(float(lam), direction, fprime0)
    lam = np.asarray(lam, dtype=float)
    return c * lam - g_value(lam, direction, fprime0)


# ---------------------------------------------------------------------------
# scalar root finding
# ---------------------------------------------------------------------------

def _bisect(fn: Callable[[float], float], lo: float, hi: float, rtol: float = 0.0) -> float:
    """Bisection for an increasing-or-decreasing sign change on [lo, hi].

    Runs until the bracket is below ``rtol`` relative width or stops shrinking
    in floating point.
    """
    flo = fn(lo)
    if flo == 0.0:
        return lo
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if rtol and hi - lo <= rtol * abs(hi):
            break
    return 0.5 * (lo + hi)


def _minimize_ratio(g: Callable[[float], float], gp: Callable[[float], float],
                    gpp: Optional[Callable[[float], float]], tol: float) -> Tuple[float, float]:
    """Minimise g(x)/x over x > 0 for convex g with g(0) > 0.

    Returns (min value, minimiser).  The root of ``x g'(x) - g(x)`` is bracketed
    by doubling from 1 up to ``LAMBDA_MAX_CAP``.
    """
    def h(x):
        return x * gp(x) - g(x)

    hi = 1.0
    while h(hi) <= 0.0:
        if hi >= LAMBDA_MAX_CAP:
            raise BracketError(
                f"no sign change of lambda*g'-g below lambda_max={hi:g}", hi)
        hi = min(2.0 * hi, LAMBDA_MAX_CAP)
    x = _bisect(h, 0.0, hi, rtol=tol)
    if gpp is not None:
        # one Newton polish; h' = x g''(x) > 0
        slope = x * gpp(x)
        if slope > 0.0:
            y = x - h(x) / slope
            if 0.0 < y and abs(y - x) <= 1e-6 * x and abs(h(y)) <= abs(h(x)):
                x = y
    return g(x) / x, x


def minimal_speed(direction, fprime0: float, tol: float = 1e-12) -> DispersionResult:
    if not fprime0 > 0:
        raise ValueError("f'(0) must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    dr = as_direction(direction)
    d = dr.delta
    c, lam = _minimize_ratio(lambda x: _g_scalar(x, d, fprime0),
                             lambda x: _gp_scalar(x, d),
                             lambda x: _gpp_scalar(x, d), tol)
    return DispersionResult(c_star=c, lambda_star=lam, alpha=dr.alpha)


def grid_minimal_speed(direction, fprime0: float, step: float = 0.01,
                       count: int = 2000) -> DispersionResult:
    """Grid search over ``lambda_n = step * n``, n = 1..count."""
    lam = step * np.arange(1, count + 1)
    ratio = g_value(lam, direction, fprime0) / lam
    k = int(np.argmin(ratio))
    return DispersionResult(float(ratio[k]), float(lam[k]), as_direction(direction).alpha)


def decay_roots(c: float, direction, fprime0: float) -> RootClassification:
    """Classify the positive roots of ``G(c, .)``."""
    if not c > 0:
        raise ValueError("speed c must be positive")
    dr = as_direction(direction)
    d = dr.delta
    res = minimal_speed(dr, fprime0)
    cs, ls = res.c_star, res.lambda_star
    if abs(c - cs) <= TANGENT_BAND * max(1.0, cs):
        return RootClassification("Tangent", c, cs, ls, ls, ls)
    if c < cs:
        return RootClassification("NoRoot", c, cs, ls)

    def G(x):
        return c * x - _g_scalar(x, d, fprime0)

    lam1 = _bisect(G, 0.0, ls)
    hi = 2.0 * ls
    while G(hi) >= 0.0:
        hi *= 2.0
        if hi > 1e6:  # pragma: no cover - g grows like cosh, cannot happen
            raise BracketError("upper decay root not bracketed", hi)
    lam2 = _bisect(G, ls, hi)
    return RootClassification("TwoRoots", c, cs, ls, lam1, lam2)


def lambda_zero(c: float, direction, fprime1: float) -> float:
    """Unique negative root of ``c lam - (1/3) sum cosh(d_m lam) + 1 - f'(1) = 0``."""
    if not c > 0:
        raise ValueError("speed c must be positive")
    if not fprime1 < 0:
        raise ValueError("f'(1) must be negative")
    d = as_direction(direction).delta

    def F(x):
        return c * x - (math.cosh(d[0] * x) + math.cosh(d[1] * x)
                        + math.cosh(d[2] * x)) / 3.0 + 1.0 - fprime1

    lo = -1.0
    while F(lo) > 0.0:
        lo *= 2.0
        if lo < -1e6:
            raise BracketError("negative root not bracketed", lo)
    return _bisect(F, lo, 0.0)


# ---------------------------------------------------------------------------
# angular sensitivity
# ---------------------------------------------------------------------------

def phi(n: int, alpha):
    """Phi_n(alpha), evaluated by direct powering; vectorised over alpha."""
    a = np.asarray(alpha, dtype=float)
    c, s = np.cos(a), np.sin(a)
    p = 2 * int(n) + 1
    out = ((SQRT3_2 * c + 0.5 * s) * (SQRT3_2 * s - 0.5 * c) ** p
           + (SQRT3_2 * c - 0.5 * s) * (SQRT3_2 * s + 0.5 * c) ** p
           - s * c ** p)
    return float(out) if out.ndim == 0 else out


def dg_dalpha_closed(lam: float, direction) -> float:
    """Closed-form derivative of g with respect to the direction angle."""
    if not lam > 0:
        raise ValueError("decay rate lambda must be positive")
    a = as_direction(direction).alpha
    c, s = math.cos(a), math.sin(a)
    u = SQRT3_2 * s - 0.5 * c
    w = SQRT3_2 * s + 0.5 * c
    return lam / 6.0 * (
        s * (math.exp(-lam * c) - math.exp(lam * c))
        + (SQRT3_2 * c + 0.5 * s) * (math.exp(lam * u) - math.exp(-lam * u))
        + (SQRT3_2 * c - 0.5 * s) * (math.exp(lam * w) - math.exp(-lam * w)))


def dg_dalpha_series(lam: float, alpha, terms: int) -> float:
    """Truncated power series ``sum_{n<terms} lam^(2n+2) / (3 (2n+1)!) * Phi_n(alpha)``."""
    if not lam > 0:
        raise ValueError("decay rate lambda must be positive")
    if terms < 1:
        raise ValueError("terms must be >= 1")
    a = as_direction(alpha).alpha
    total = 0.0
    coeff = lam * lam  # lam^(2n+2) / (2n+1)! at n = 0
    for n in range(terms):
        if n:
            coeff *= lam * lam / ((2 * n) * (2 * n + 1))
        total += coeff / 3.0 * phi(n, a)
    return total


def speed_curve(alphas: Sequence[float], fprime0: float) -> List[DispersionResult]:
    """minimal_speed over a sequence of angles, in input order."""
    alphas = list(alphas)
    if not alphas:
        raise ValueError("speed_curve needs at least one angle")
    return [minimal_speed(Direction.from_angle(a), fprime0) for a in alphas]


def curve_extrema(alphas: Sequence[float], speeds: Sequence[float]):
    """Indices of strict-or-tied local maxima and minima on a periodic sample."""
    c = np.asarray(speeds, dtype=float)
    if c.size < 3:
        return [], []
    left, right = np.roll(c, 1), np.roll(c, -1)
    maxima = np.nonzero((c >= left) & (c >= right) & ((c > left) | (c > right)))[0]
    minima = np.nonzero((c <= left) & (c <= right) & ((c < left) | (c < right)))[0]
    return maxima.tolist(), minima.tolist()


# ---------------------------------------------------------------------------
# square lattice comparison
# ---------------------------------------------------------------------------

def square_g(nu, beta: float, fprime0: float):
    cb, sb = math.cos(beta), math.sin(beta)
    nu = np.asarray(nu, dtype=float)
    return (np.exp(nu * cb) + np.exp(-nu * cb) + np.exp(nu * sb) + np.exp(-nu * sb)
            - 4.0 + fprime0)


def square_minimal_speed(beta: float, fprime0: float, tol: float = 1e-12) -> Tuple[float, float]:
    """Minimal speed on the square lattice in direction ``beta``; returns (c_s*, nu*)."""
    if not fprime0 > 0:
        raise ValueError("f'(0) must be positive")
    b = normalize_angle(beta)
    cb, sb = math.cos(b), math.sin(b)

    def g(x):
        return 2.0 * math.cosh(x * cb) + 2.0 * math.cosh(x * sb) - 4.0 + fprime0

    def gp(x):
        return 2.0 * cb * math.sinh(x * cb) + 2.0 * sb * math.sinh(x * sb)

    def gpp(x):
        return 2.0 * cb * cb * math.cosh(x * cb) + 2.0 * sb * sb * math.cosh(x * sb)

    return _minimize_ratio(g, gp, gpp, tol)
