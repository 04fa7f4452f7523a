"""Traveling-wave profiles by monotone iteration of an exponentially weighted integral map.

The wave equation ``c U' = (1/6) D[U] + f(U)`` is rewritten as the fixed point

    U(xi) = exp(-mu xi) * int_{-inf}^{xi} exp(mu z) H[U](z) dz,
    H[U] = mu U + D[U] / (6c) + f(U) / c,

with ``mu`` large enough that ``H`` is order preserving.  Starting from the
upper solution ``min(1, exp(lambda1 xi))`` the iterates decrease monotonically
to the profile.

Discretisation
--------------
* Uniform grid ``xi_k = (k - K) h``; off-grid shifts ``xi +- d_m`` use linear
  interpolation, which keeps ``H`` order preserving.
* Outside the window ``U = 1`` on the right.  On the left the iteration uses an
  exponential continuation ``U(-L) exp(rate (xi + L))``; with ``U = 0`` there
  the translation mode of the truncated problem is unpinned and the front
  drifts across the window.
* The weighted integral is an exact-exponential recurrence with ``H``
  piecewise linear per cell.

Exponentials are exact eigenfunctions of both discrete operators, so the grid
has its own decay exponents (``lambda1_scheme``, ``lambda2_scheme``), within
O(h^2) of the continuous ones.  The upper and lower solutions used to seed and
bound the iteration are built from the grid exponents; with the continuous ones
the bounds are violated at the O(h^2) level in the tail, where the two bounds
touch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels
from .dispersion import Direction, as_direction, decay_roots, big_g, _bisect
from .growth import GrowthFunction

SANDWICH_SLACK = 1e-14


class SubcriticalSpeedError(ValueError):
    """Requested speed admits no front built by the monotone iteration."""

    def __init__(self, message: str, classification):
        super().__init__(message)
        self.classification = classification


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last_diff: float, iterations: int):
        super().__init__(message)
        self.last_diff = last_diff
        self.iterations = iterations


class SandwichViolation(RuntimeError):
    """An iterate left the band between the lower and upper solutions."""


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

def half_count(L: float, h: float) -> int:
    return int(math.floor(L / h + 1e-9))


@dataclass
class ProfileGrid:
    L: float
    h: float
    values: np.ndarray

    @property
    def xi(self) -> np.ndarray:
        K = half_count(self.L, self.h)
        return (np.arange(2 * K + 1) - K) * self.h

    @classmethod
    def from_function(cls, L: float, h: float, fn) -> "ProfileGrid":
        K = half_count(L, h)
        xi = (np.arange(2 * K + 1) - K) * h
        return cls(L, h, np.asarray(fn(xi), dtype=float) * np.ones_like(xi))

    def with_values(self, values) -> "ProfileGrid":
        return ProfileGrid(self.L, self.h, np.asarray(values, dtype=float))


@dataclass(frozen=True)
class _Stencil:
    offsets: np.ndarray
    fracs: np.ndarray
    pad: int


def _stencil(direction: Direction, h: float) -> _Stencil:
    shifts = list(direction.delta) + [-d for d in direction.delta]
    offsets, fracs = [], []
    for s in shifts:
        q = s / h
        j = math.floor(q)
        offsets.append(j)
        fracs.append(q - j)
    pad = int(math.ceil(1.0 / h)) + 2
    return _Stencil(np.array(offsets, dtype=np.int64), np.array(fracs), pad)


def _cell_weights(mu: float, h: float):
    """(decay, w0, w1): integral of exp(mu (z - xi_{k+1})) times the hat weights on one cell."""
    decay = math.exp(-mu * h)
    w1 = (mu * h + math.expm1(-mu * h)) / (mu * mu * h)
    w0 = -math.expm1(-mu * h) / mu - w1
    return decay, w0, w1


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IterationParams:
    mu: float
    gamma: float
    M: float
    c: float
    lambda1: float
    lambda2: float
    lambda1_scheme: float
    lambda2_scheme: float
    theta: float
    N: float
    h: float
    alpha: float

    def validate(self, max_slope: float, c_star: float) -> None:
        problems = []
        if not self.c > c_star:
            problems.append("c must exceed c*")
        hi = min(self.lambda1 * self.theta, self.lambda2 - self.lambda1,
                 self.lambda1_scheme * self.theta,
                 self.lambda2_scheme - self.lambda1_scheme)
        if not 0.0 < self.gamma < hi:
            problems.append(f"gamma={self.gamma} outside (0, {hi})")
        if not self.mu > (max_slope + 1.0) / self.c:
            problems.append("mu too small for an order-preserving map")
        if problems:
            raise ValueError("invalid iteration parameters: " + "; ".join(problems))


def scheme_big_g(lam, c: float, direction, fprime0: float, mu: float, h: float):
    """Grid analogue of ``c lam - g(lam)`` for the discretised fixed-point map.

    ``exp(lam xi)`` is mapped to ``F(lam) exp(lam xi)`` by the linearised
    iteration; this returns ``c (1/W(lam) - H(lam))`` where ``F = H W``, which
    tends to ``c lam - g(lam)`` as ``h -> 0``.
    """
    st = _stencil(as_direction(direction), h)
    lam = np.asarray(lam, dtype=float)
    decay, w0, w1 = _cell_weights(mu, h)
    S = sum((1.0 - t) * np.exp(lam * j * h) + t * np.exp(lam * (j + 1) * h)
            for j, t in zip(st.offsets, st.fracs))
    hfac = mu + (S - 6.0) / (6.0 * c) + fprime0 / c
    eh = np.exp(lam * h)
    inv_w = (eh - decay) / (w0 + w1 * eh)
    out = c * (inv_w - hfac)
    return float(out) if out.ndim == 0 else out


def _subcritical_error(cls) -> SubcriticalSpeedError:
    if cls.variant == "NoRoot":
        msg = (f"subcritical speed: c={cls.c:.12g} < c*={cls.c_star:.12g}; "
               "c*lambda - g(lambda) < 0 for every lambda > 0, so no front exists "
               "(monotone iteration requires c > c*)")
    else:
        msg = (f"critical speed: c={cls.c:.12g} equals c*={cls.c_star:.12g}; the decay roots "
               "coincide (lambda1 = lambda2), the admissible gamma interval is empty "
               "(monotone iteration requires c > c*)")
    return SubcriticalSpeedError(msg, cls)


def make_params(c: float, direction, f: GrowthFunction, safety: float = 0.5,
                h: float = 0.02, M: Optional[float] = None) -> IterationParams:
    """Admissible (mu, gamma, M) for speed ``c`` on a grid of spacing ``h``.

    ``gamma`` and ``M`` are chosen so the lower solution is admissible for both
    the continuous exponents and the grid exponents.  A caller-supplied ``M``
    is raised to the admissible minimum if it is too small.
    """
    if not 0.0 < safety < 1.0:
        raise ValueError("safety must lie in (0, 1)")
    dr = as_direction(direction)
    cls = decay_roots(c, dr, f.fprime0)
    if cls.variant != "TwoRoots":
        raise _subcritical_error(cls)
    l1, l2 = cls.lambda1, cls.lambda2
    slope = f.max_abs_derivative()
    mu = (slope + 1.0) / c * (1.0 + safety)

    def Gh(x):
        return scheme_big_g(x, c, dr, f.fprime0, mu, h)

    top = Gh(cls.lambda_star)
    if not top > 0.0:
        raise SubcriticalSpeedError(
            f"speed c={c:.12g} is too close to c*={cls.c_star:.12g} for grid spacing h={h}; "
            "refine h", cls)
    l1h = _bisect(Gh, 0.0, cls.lambda_star)
    hi = 2.0 * cls.lambda_star
    while Gh(hi) >= 0.0:
        hi *= 2.0
    l2h = _bisect(Gh, cls.lambda_star, hi)

    theta = f.theta
    gamma = safety * min(l1 * theta, l2 - l1, l1h * theta, l2h - l1h)
    need = 1.0
    if f.N > 0:
        need = max(need, f.N / big_g(c, l1 + gamma, dr, f.fprime0),
                   f.N / Gh(l1h + gamma))
    M = need if M is None else max(float(M), need)
    params = IterationParams(mu=mu, gamma=gamma, M=M, c=c, lambda1=l1, lambda2=l2,
                             lambda1_scheme=l1h, lambda2_scheme=l2h, theta=theta,
                             N=f.N, h=h, alpha=dr.alpha)
    params.validate(slope, cls.c_star)
    return params


# ---------------------------------------------------------------------------
# upper / lower solutions
# ---------------------------------------------------------------------------

def upper_solution(xi, lambda1: float):
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    return np.minimum(1.0, np.exp(lambda1 * np.minimum(np.asarray(xi, dtype=float), 0.0)))


def lower_solution(xi, lambda1: float, gamma: float, M: float):
    """``max(0, (1 - M exp(gamma xi)) exp(lambda1 xi))``; zero for xi >= -ln(M)/gamma."""
    xi = np.asarray(xi, dtype=float)
    cut = -math.log(M) / gamma
    xs = np.minimum(xi, cut)
    val = (1.0 - M * np.exp(gamma * xs)) * np.exp(lambda1 * xs)
    return np.where(xi >= cut, 0.0, np.maximum(0.0, val))


# ---------------------------------------------------------------------------
# the two halves of the fixed-point map
# ---------------------------------------------------------------------------

def _pad(values: np.ndarray, pad: int, h: float, tail_rate: Optional[float]) -> np.ndarray:
    if tail_rate is None:
        left = np.zeros(pad)
    else:
        left = values[0] * np.exp(tail_rate * h * np.arange(-pad, 0))
    return np.concatenate([left, values, np.ones(pad)])


def _lattice_term(values, direction: Direction, h: float, tail_rate=None) -> np.ndarray:
    """``D[U] = sum_m U(xi - d_m) + U(xi + d_m) - 6 U(xi)`` on the grid."""
    st = _stencil(direction, h)
    P = _pad(values, st.pad, h, tail_rate)
    return _kernels.shift_sum(P, st.pad, st.offsets, st.fracs, values.size) - 6.0 * values


def apply_H(U: ProfileGrid, params: IterationParams, direction, f: GrowthFunction,
            tail_rate: Optional[float] = None) -> ProfileGrid:
    """Pointwise ``mu U + D[U]/(6c) + f(U)/c``.

    Left of the window ``U`` is 0, or ``U(-L) exp(tail_rate (xi + L))`` when a
    tail rate is given; right of it ``U`` is 1.
    """
    dr = as_direction(direction)
    u = np.asarray(U.values, dtype=float)
    c = params.c
    lat = _lattice_term(u, dr, U.h, tail_rate)
    return U.with_values(params.mu * u + lat / (6.0 * c) + np.asarray(f.eval(u)) / c)


def weighted_integral(Hvals: ProfileGrid, mu: float, tail_rate: float = 0.0) -> ProfileGrid:
    """``exp(-mu xi) int_{-inf}^{xi} exp(mu z) H(z) dz`` on the grid.

    The part left of the window is taken as ``H(-L) exp(tail_rate (z + L))``;
    with the default rate 0 this is the constant-tail value ``H(-L)/mu``.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    hv = np.asarray(Hvals.values, dtype=float)
    h = Hvals.h
    decay, w0, w1 = _cell_weights(mu, h)
    r = math.exp(-tail_rate * h)
    seed = hv[0] * (w0 * r + w1) / (1.0 - decay * r)
    return Hvals.with_values(_kernels.exp_scan(hv, decay, w0, w1, seed))


# ---------------------------------------------------------------------------
# iteration
# ---------------------------------------------------------------------------

@dataclass
class WaveProfile:
    grid: ProfileGrid
    c: float
    alpha: float
    residual_max: float
    iterations: int
    params: IterationParams
    tol: float
    last_diff: float
    max_increase: float = 0.0
    max_sandwich_violation: float = 0.0
    min_step: float = 0.0
    shift: float = 0.0

    @property
    def xi(self) -> np.ndarray:
        return self.grid.xi

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    def sidecar(self) -> dict:
        p = self.params
        return {"c": self.c, "alpha": self.alpha, "L": self.grid.L, "h": self.grid.h,
                "mu": p.mu, "gamma": p.gamma, "M": p.M, "lambda1": p.lambda1,
                "lambda2": p.lambda2, "lambda1_scheme": p.lambda1_scheme,
                "lambda2_scheme": p.lambda2_scheme, "residual_max": self.residual_max,
                "iterations": self.iterations}

    def write(self, csv_path, json_path=None) -> None:
        from .io import format_number
        with open(csv_path, "w", newline="\n") as fh:
            fh.write("xi,U\n")
            for x, u in zip(self.xi, self.values):
                fh.write(f"{format_number(x)},{format_number(u)}\n")
        if json_path is not None:
            with open(json_path, "w") as fh:
                json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
                fh.write("\n")


def fixed_point_map(values: np.ndarray, params: IterationParams, direction,
                    f: GrowthFunction, L: float) -> np.ndarray:
    """One application of the discrete map, with the grid's own tail closure."""
    g = ProfileGrid(L, params.h, values)
    Hv = apply_H(g, params, direction, f, tail_rate=params.lambda1_scheme)
    return weighted_integral(Hv, params.mu, tail_rate=params.lambda1_scheme).values


def iterate_profile(c: float, direction, f: GrowthFunction, L: float = 60.0,
                    h: float = 0.02, tol: float = 1e-8, max_iters: int = 5000,
                    safety: float = 0.5, shift: float = 0.0, M: Optional[float] = None,
                    check_sandwich: bool = True) -> WaveProfile:
    """Monotone iteration from the upper solution until successive iterates agree to ``tol``.

    ``shift`` translates the starting upper solution (and the bounding lower
    solution) by that amount.  Raises :class:`ConvergenceError` when
    ``max_iters`` is exhausted and :class:`SandwichViolation` if an iterate
    leaves the band between the bounds.
    """
    if h > 0.05:
        raise ValueError("grid spacing h must be <= 0.05")
    dr = as_direction(direction)
    params = make_params(c, dr, f, safety, h=h, M=M)
    grid = ProfileGrid.from_function(L, h, lambda x: 0.0 * x)
    xi = grid.xi
    if L < 1.0 + abs(shift):
        raise ValueError("window half-width L too small")
    upper = upper_solution(xi - shift, params.lambda1_scheme)
    lower = lower_solution(xi - shift, params.lambda1_scheme, params.gamma, params.M)

    U = upper.copy()
    max_inc = 0.0
    worst = 0.0
    min_step = 0.0
    diff = float("inf")
    for it in range(1, max_iters + 1):
        nxt = fixed_point_map(U, params, dr, f, L)
        delta = nxt - U
        diff = float(np.max(np.abs(delta)))
        max_inc = max(max_inc, float(np.max(delta)))
        min_step = min(min_step, float(np.min(np.diff(nxt))))
        if check_sandwich:
            viol = max(float(np.max(nxt - upper)), float(np.max(lower - nxt)))
            worst = max(worst, viol)
            if viol > SANDWICH_SLACK:
                raise SandwichViolation(
                    f"iterate {it} left the band between lower and upper solutions by {viol:.3e}")
        U = nxt
        if diff <= tol:
            break
    else:
        raise ConvergenceError(
            f"no convergence after {max_iters} iterations (last sup-difference {diff:.3e})",
            diff, max_iters)

    prof = WaveProfile(grid=grid.with_values(U), c=c, alpha=dr.alpha, residual_max=float("nan"),
                       iterations=it, params=params, tol=tol, last_diff=diff,
                       max_increase=max_inc, max_sandwich_violation=worst, min_step=min_step,
                       shift=shift)
    prof.residual_max = residual(prof, dr, f)
    return prof


def residual(profile: WaveProfile, direction, f: GrowthFunction, margin: float = 1.0) -> float:
    """max |c U' - D[U]/6 - f(U)| over nodes with |xi| <= L - margin (U' centred)."""
    g = profile.grid
    u = np.asarray(g.values, dtype=float)
    h = g.h
    tail = profile.params.lambda1_scheme if profile.params is not None else None
    lat = _lattice_term(u, as_direction(direction), h, tail)
    du = (u[2:] - u[:-2]) / (2.0 * h)
    defect = np.abs(profile.c * du - lat[1:-1] / 6.0 - np.asarray(f.eval(u[1:-1])))
    inner = np.abs(g.xi[1:-1]) <= g.L - margin + 1e-12
    return float(np.max(defect[inner])) if inner.any() else 0.0


def half_crossing(xi: np.ndarray, values: np.ndarray) -> float:
    """Position where a non-decreasing profile first reaches 1/2 (linear interpolation)."""
    k = int(np.argmax(values >= 0.5))
    if values[k] < 0.5 or k == 0:
        raise ValueError("profile does not cross 1/2 inside the window")
    u0, u1 = values[k - 1], values[k]
    return float(xi[k - 1] + (0.5 - u0) / (u1 - u0) * (xi[k] - xi[k - 1]))


def normalize_profile(profile: WaveProfile) -> WaveProfile:
    """Re-sample the profile on the same grid, translated so that U(0) = 1/2."""
    xi = profile.xi
    u = profile.values
    x_half = half_crossing(xi, u)
    new = np.interp(xi + x_half, xi, u)
    return replace(profile, grid=profile.grid.with_values(new), shift=0.0)


def _fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


def left_decay_rate(profile, tol: Optional[float] = None, min_nodes: int = 5) -> float:
    """Least-squares slope of ln U over nodes with U in [10 tol, 1e-3]."""
    grid = profile.grid if isinstance(profile, WaveProfile) else profile
    if tol is None:
        tol = profile.tol if isinstance(profile, WaveProfile) else 1e-8
    u = grid.values
    sel = (u >= 10.0 * tol) & (u <= 1e-3)
    if sel.sum() < min_nodes:
        raise ValueError("too few nodes in the left tail window; increase L")
    return _fit_slope(grid.xi[sel], np.log(u[sel]))


def right_decay_rate(profile, tol: Optional[float] = None, min_nodes: int = 5,
                     margin: float = 1.0) -> float:
    """Least-squares slope of ln(1 - U) over nodes with 1 - U in [10 tol, 1e-3]."""
    grid = profile.grid if isinstance(profile, WaveProfile) else profile
    if tol is None:
        tol = profile.tol if isinstance(profile, WaveProfile) else 1e-8
    w = 1.0 - grid.values
    sel = (w >= 10.0 * tol) & (w <= 1e-3) & (grid.xi <= grid.L - margin)
    if sel.sum() < min_nodes:
        raise ValueError("too few nodes in the right tail window; increase L")
    return _fit_slope(grid.xi[sel], np.log(w[sel]))
