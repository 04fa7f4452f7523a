"""Cauchy problem on the hexagonal lattice, solved on its square-lattice image.

The linear map ``(i, j) = (x + y/sqrt3, 2y/sqrt3)`` sends the hexagonal node set
bijectively onto Z^2, and the six hexagonal neighbours of a node onto the
offsets (+-1, 0), (0, +-1), (1, 1), (-1, -1).  The lattice equation becomes

    v' = (1/6) Lap_s[v] + f(v)

with the six-point stencil ``Lap_s``.  Time stepping is classical RK4; the
first time each monitored node reaches 1/2 is recorded, and average front
speeds between rings along common rays are reported.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .growth import GrowthFunction, logistic
from .io import format_number, read_keyvalue

SQRT3 = math.sqrt(3.0)

# hex (x, y) -> square (i, j)
HEX_TO_SQUARE = np.array([[1.0, SQRT3 / 3.0], [0.0, 2.0 * SQRT3 / 3.0]])
# square (i, j) -> hex (x, y)
SQUARE_TO_HEX = np.array([[1.0, -0.5], [0.0, SQRT3 / 2.0]])

SQUARE_NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1))

CLAMP_ABORT = 1e-6


class NotOnLatticeError(ValueError):
    def __init__(self, message: str, distance: float):
        super().__init__(message)
        self.distance = distance


class StabilityError(RuntimeError):
    pass


class DataQualityError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# coordinates
# ---------------------------------------------------------------------------

def hex_to_square(x: float, y: float, atol: float = 1e-9) -> Tuple[int, int]:
    i, j = HEX_TO_SQUARE @ np.array([x, y], dtype=float)
    ri, rj = round(i), round(j)
    dist = max(abs(i - ri), abs(j - rj))
    if dist > atol:
        raise NotOnLatticeError(
            f"({x}, {y}) is not a hexagonal lattice node: image ({i}, {j}) is {dist:.3e} "
            "away from the nearest integer pair", dist)
    return int(ri), int(rj)


def square_to_hex(i, j) -> Tuple[float, float]:
    x = np.asarray(i, dtype=float) - 0.5 * np.asarray(j, dtype=float)
    y = SQRT3 / 2.0 * np.asarray(j, dtype=float)
    if np.ndim(x) == 0:
        return float(x), float(y)
    return x, y


def hex_neighbours() -> List[Tuple[float, float]]:
    return [(1.0, 0.0), (-1.0, 0.0), (0.5, SQRT3 / 2), (-0.5, -SQRT3 / 2),
            (0.5, -SQRT3 / 2), (-0.5, SQRT3 / 2)]


def rotate60(i, j):
    """Rotation of the hexagonal lattice by -60 degrees, in (i, j) coordinates."""
    return j, j - i


# ---------------------------------------------------------------------------
# state and stepping
# ---------------------------------------------------------------------------

@dataclass
class LatticeState:
    R: int
    v: np.ndarray
    t: float = 0.0
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.boundary not in ("dirichlet", "periodic"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")
        if self.v.shape != (2 * self.R + 1, 2 * self.R + 1):
            raise ValueError("field shape must be (2R+1, 2R+1)")

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @classmethod
    def zeros(cls, R: int, boundary: str = "dirichlet") -> "LatticeState":
        return cls(R, np.zeros((2 * R + 1, 2 * R + 1)), 0.0, boundary)

    @classmethod
    def delta(cls, R: int, boundary: str = "dirichlet") -> "LatticeState":
        s = cls.zeros(R, boundary)
        s.v[R, R] = 1.0
        return s

    def at(self, i, j):
        return self.v[np.asarray(i) + self.R, np.asarray(j) + self.R]


def laplacian_s(state: LatticeState) -> np.ndarray:
    return _kernels.hex_laplacian(state.v, state.periodic)


def dt_max(f: GrowthFunction) -> float:
    return 0.2 / max(f.fprime0, 1.0)


def default_dt(f: GrowthFunction) -> float:
    return 0.1 / f.fprime0 if f.fprime0 > 0 else 0.1


def rk4_step(v: np.ndarray, f: GrowthFunction, dt: float, periodic: bool) -> np.ndarray:
    """Unclamped RK4 step of ``v' = Lap_s[v]/6 + f(v)``."""
    if f.logistic_rate is not None:
        return _kernels.rk4_logistic_step(v, float(f.logistic_rate), dt, periodic)

    def rhs(w):
        return _kernels.hex_laplacian(w, periodic) / 6.0 + np.asarray(f.eval(w))

    k1 = rhs(v)
    k2 = rhs(v + 0.5 * dt * k1)
    k3 = rhs(v + 0.5 * dt * k2)
    k4 = rhs(v + dt * k3)
    return v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: LatticeState, f: GrowthFunction, dt: float) -> LatticeState:
    if dt > dt_max(f) * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the stability guard {dt_max(f):.6g}")
    new = rk4_step(state.v, f, dt, state.periodic)
    over = max(float(np.max(new)) - 1.0, -float(np.min(new)), 0.0)
    if over > CLAMP_ABORT:
        raise StabilityError(f"RK4 step left [0,1] by {over:.3e}; reduce dt")
    if over > 0.0:
        np.clip(new, 0.0, 1.0, out=new)
    return LatticeState(state.R, new, state.t + dt, state.boundary)


# ---------------------------------------------------------------------------
# monitored nodes
# ---------------------------------------------------------------------------

def half_extent(side: int) -> int:
    return int(math.ceil(side / 2))


def ring_nodes(side: int) -> np.ndarray:
    """All (i, j) with max(|i|, |j|) equal to the ring half-extent, by hex angle."""
    if side < 2:
        raise ValueError("ring side must be >= 2")
    k = half_extent(side)
    r = np.arange(-k, k + 1)
    I, J = np.meshgrid(r, r, indexing="ij")
    on = np.maximum(np.abs(I), np.abs(J)) == k
    nodes = np.stack([I[on], J[on]], axis=1)
    x, y = square_to_hex(nodes[:, 0], nodes[:, 1])
    order = np.argsort(np.mod(np.arctan2(y, x), 2 * np.pi), kind="stable")
    return nodes[order]


def _sym_round(x: np.ndarray) -> np.ndarray:
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def ray_monitors(sides: Sequence[int]):
    """Nodes on every ring along the rays through the innermost ring's nodes.

    Returns ``(rays, nodes, extents)``: ``rays`` are the innermost-ring nodes,
    ``nodes[r, n]`` is the node on ring ``n`` nearest the ray ``r``.  A node is
    exactly on its ray whenever the ring's half-extent is a multiple of the
    innermost one.
    """
    extents = sorted({half_extent(s) for s in sides})
    rays = ring_nodes(2 * extents[0])
    k0 = extents[0]
    nodes = np.empty((rays.shape[0], len(extents), 2), dtype=np.int64)
    for n, K in enumerate(extents):
        nodes[:, n, :] = _sym_round(rays * (K / k0))
    return rays, nodes, extents


def ray_angle(i, j) -> float:
    x, y = square_to_hex(i, j)
    return float(np.mod(np.arctan2(y, x), 2 * np.pi))


# ---------------------------------------------------------------------------
# configuration and run
# ---------------------------------------------------------------------------

@dataclass
class SimConfig:
    a: float = 200.0
    R: int = 120
    dt: Optional[float] = None
    t_max: float = 5.0
    boundary: str = "dirichlet"
    rings: Tuple[int, ...] = (5, 10, 20, 60)
    snapshot_every: int = 0
    initial: str = "delta"

    @classmethod
    def from_mapping(cls, kv: Dict[str, str]) -> "SimConfig":
        known = {"a", "R", "dt", "t_max", "boundary", "rings", "snapshot_every", "initial"}
        unknown = set(kv) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls()
        if "a" in kv:
            cfg.a = float(kv["a"])
        if "R" in kv:
            cfg.R = int(kv["R"])
        if "dt" in kv and kv["dt"] not in ("", "auto", "none"):
            cfg.dt = float(kv["dt"])
        if "t_max" in kv:
            cfg.t_max = float(kv["t_max"])
        if "boundary" in kv:
            cfg.boundary = kv["boundary"].lower()
        if "rings" in kv:
            parts = kv["rings"].replace("{", "").replace("}", "").replace(",", " ").split()
            cfg.rings = tuple(int(p) for p in parts)
        if "snapshot_every" in kv:
            cfg.snapshot_every = int(kv["snapshot_every"])
        if "initial" in kv:
            cfg.initial = kv["initial"].lower()
        return cfg

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        return cls.from_mapping(read_keyvalue(path))

    def resolved_dt(self) -> float:
        return self.dt if self.dt is not None else 0.1 / self.a

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rings"] = list(self.rings)
        d["dt"] = self.resolved_dt()
        return d


@dataclass
class FirstPassageRecord:
    ray: int
    ray_alpha: float
    ring_n: int
    half_extent: int
    i: int
    j: int
    x: float
    y: float
    t_cross: float


@dataclass
class SimResult:
    records: List[FirstPassageRecord]
    partial: bool
    t_final: float
    steps: int
    extents: List[int]
    snapshots: List[Tuple[float, np.ndarray]] = field(default_factory=list)

    def crossing_rows(self):
        for r in self.records:
            yield (r.ray_alpha, r.ring_n, r.i, r.j, r.x, r.y, r.t_cross)


def run(config: SimConfig, f: Optional[GrowthFunction] = None) -> SimResult:
    """Integrate from the configured initial field until every monitor crossed 1/2 or t_max."""
    f = logistic(config.a) if f is None else f
    dt = config.resolved_dt()
    rays, nodes, extents = ray_monitors(config.rings)
    if config.R < 2 * extents[-1]:
        raise ValueError(f"R={config.R} must be at least twice the largest ring "
                         f"half-extent ({extents[-1]})")
    if config.initial == "delta":
        state = LatticeState.delta(config.R, config.boundary)
    elif config.initial == "zero":
        state = LatticeState.zeros(config.R, config.boundary)
    else:
        raise ValueError(f"unknown initial condition {config.initial!r}")

    flat = nodes.reshape(-1, 2)
    ii = flat[:, 0] + config.R
    jj = flat[:, 1] + config.R
    t_cross = np.full(flat.shape[0], np.nan)
    prev = state.v[ii, jj].copy()
    t_cross[prev >= 0.5] = 0.0

    snapshots = []
    if config.snapshot_every:
        snapshots.append((0.0, state.v.copy()))
    k = 0
    n_steps = int(math.ceil(config.t_max / dt - 1e-9))
    while np.isnan(t_cross).any() and k < n_steps:
        state = step(state, f, dt)
        k += 1
        cur = state.v[ii, jj]
        hit = np.isnan(t_cross) & (prev < 0.5) & (cur >= 0.5)
        if hit.any():
            t0 = (k - 1) * dt
            t_cross[hit] = t0 + dt * (0.5 - prev[hit]) / (cur[hit] - prev[hit])
        prev = cur.copy()
        if config.snapshot_every and k % config.snapshot_every == 0:
            snapshots.append((k * dt, state.v.copy()))

    records = []
    for r in range(rays.shape[0]):
        alpha = ray_angle(rays[r, 0], rays[r, 1])
        for n, K in enumerate(extents):
            i, j = (int(v) for v in nodes[r, n])
            x, y = square_to_hex(i, j)
            records.append(FirstPassageRecord(r, alpha, n + 1, K, i, j, x, y,
                                              float(t_cross[r * len(extents) + n])))
    return SimResult(records, bool(np.isnan(t_cross).any()), k * dt, k, extents, snapshots)


@dataclass
class SpeedRow:
    ray: int
    alpha: float
    n: int
    cbar: float


def estimate_speeds(records: Sequence[FirstPassageRecord],
                    allow_partial: bool = False) -> List[SpeedRow]:
    """Average speed between consecutive rings along each ray (hexagonal distance / time)."""
    by_ray: Dict[int, List[FirstPassageRecord]] = {}
    for rec in records:
        by_ray.setdefault(rec.ray, []).append(rec)
    rows = []
    for ray in sorted(by_ray):
        recs = sorted(by_ray[ray], key=lambda r: r.ring_n)
        for a, b in zip(recs[:-1], recs[1:]):
            if math.isnan(a.t_cross) or math.isnan(b.t_cross):
                if allow_partial:
                    continue
                raise ValueError(f"ray {ray}: missing crossing time between rings "
                                 f"{a.ring_n} and {b.ring_n}")
            dt = b.t_cross - a.t_cross
            if not dt > 0.0:
                raise DataQualityError(
                    f"ray {ray}: crossing times do not increase outward between rings "
                    f"{a.ring_n} and {b.ring_n} ({a.t_cross} -> {b.t_cross}); check dt "
                    "and the domain size")
            dist = math.hypot(b.x - a.x, b.y - a.y)
            rows.append(SpeedRow(ray, a.ray_alpha, a.ring_n, dist / dt))
    return rows


def write_snapshot(path, t: float, R: int, v: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("t,R\n")
        fh.write(f"{format_number(t)},{R}\n")
        for row in v:
            fh.write(",".join(format_number(x) for x in row) + "\n")
