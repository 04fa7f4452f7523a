"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature.  The module-level
names (``exp_scan``, ``shift_sum``, ``hex_laplacian``, ``rk4_logistic_step``)
point at the numba versions unless the environment variable
``HEXKPP_DISABLE_NUMBA`` is set to a truthy value or numba cannot be imported.
Both variants stay importable as ``*_numba`` / ``*_numpy`` so the benchmark and
the backend-agreement tests can call them side by side.
"""
import os

import numpy as np

_FLAG = os.environ.get("HEXKPP_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by HEXKPP_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


# fastmath stays off: results must be reproducible bit-for-bit run to run
_OPTS = dict(cache=True, nogil=True, fastmath=False)

# ---------------------------------------------------------------------------
# exponentially weighted running integral
# ---------------------------------------------------------------------------

def exp_scan_numpy(hvals, decay, w0, w1, seed):
    """Solve ``I[k+1] = decay * I[k] + (w0 * H[k] + w1 * H[k+1])`` with ``I[0] = seed``.

    The recurrence runs sequentially through a ufunc ``accumulate`` so the
    rounding is identical to the compiled loop; parallel prefix forms drift
    by a few ulp and break monotonicity of the iterates near ``U = 1``.
    """
    hvals = np.asarray(hvals, dtype=np.float64)
    forcing = np.empty(hvals.size, dtype=object)
    forcing[0] = float(seed)
    forcing[1:] = w0 * hvals[:-1] + w1 * hvals[1:]
    step = np.frompyfunc(lambda acc, x: decay * acc + x, 2, 1)
    return step.accumulate(forcing).astype(np.float64)


@njit(**_OPTS)
def exp_scan_numba(hvals, decay, w0, w1, seed):
    n = hvals.shape[0]
    out = np.empty(n)
    out[0] = seed
    for k in range(n - 1):
        out[k + 1] = decay * out[k] + (w0 * hvals[k] + w1 * hvals[k + 1])
    return out


# ---------------------------------------------------------------------------
# sum of linearly interpolated shifts
# ---------------------------------------------------------------------------

def shift_sum_numpy(padded, pad, offsets, fracs, n):
    """Sum over shifts of ``(1-t) * P[pad+k+j] + t * P[pad+k+j+1]`` for k < n."""
    out = np.zeros(n)
    for j, t in zip(offsets, fracs):
        lo = pad + j
        out += (1.0 - t) * padded[lo:lo + n] + t * padded[lo + 1:lo + 1 + n]
    return out


@njit(**_OPTS)
def shift_sum_numba(padded, pad, offsets, fracs, n):
    out = np.zeros(n)
    for s in range(offsets.shape[0]):
        j = offsets[s]
        t = fracs[s]
        u = 1.0 - t
        base = pad + j
        for k in range(n):
            out[k] += u * padded[base + k] + t * padded[base + k + 1]
    return out


# ---------------------------------------------------------------------------
# six-point lattice stencil and fused RK4 for logistic growth
# ---------------------------------------------------------------------------

def hex_laplacian_numpy(v, periodic):
    """v[i+1,j]+v[i-1,j]+v[i,j+1]+v[i,j-1]+v[i+1,j+1]+v[i-1,j-1]-6v[i,j].

    Accumulated as a sum of neighbour differences so that a constant field
    gives exactly zero.
    """
    p = np.pad(v, 1, mode="wrap" if periodic else "constant")
    return ((p[2:, 1:-1] - v) + (p[:-2, 1:-1] - v) + (p[1:-1, 2:] - v)
            + (p[1:-1, :-2] - v) + (p[2:, 2:] - v) + (p[:-2, :-2] - v))


@njit(**_OPTS)
def _fill_halo(v, P, periodic):
    """Copy v into the interior of P and fill the one-cell halo (zeros or wrap)."""
    n0 = v.shape[0]
    n1 = v.shape[1]
    for i in range(n0):
        for j in range(n1):
            P[i + 1, j + 1] = v[i, j]
    if periodic:
        for i in range(n0):
            P[i + 1, 0] = v[i, n1 - 1]
            P[i + 1, n1 + 1] = v[i, 0]
        for j in range(n1 + 2):
            P[0, j] = P[n0, j]
            P[n0 + 1, j] = P[1, j]
    else:
        for i in range(n0 + 2):
            P[i, 0] = 0.0
            P[i, n1 + 1] = 0.0
        for j in range(n1 + 2):
            P[0, j] = 0.0
            P[n0 + 1, j] = 0.0


@njit(**_OPTS)
def _stencil_from_halo(P, out):
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            x = P[i + 1, j + 1]
            out[i, j] = ((P[i + 2, j + 1] - x) + (P[i, j + 1] - x) + (P[i + 1, j + 2] - x)
                         + (P[i + 1, j] - x) + (P[i + 2, j + 2] - x) + (P[i, j] - x))


@njit(**_OPTS)
def hex_laplacian_numba(v, periodic):
    P = np.empty((v.shape[0] + 2, v.shape[1] + 2))
    out = np.empty_like(v)
    _fill_halo(v, P, periodic)
    _stencil_from_halo(P, out)
    return out


def rk4_logistic_step_numpy(v, a, dt, periodic):
    """One classical RK4 step of v' = lap(v)/6 + a v (1 - v)."""
    def rhs(w):
        return hex_laplacian_numpy(w, periodic) / 6.0 + a * w * (1.0 - w)

    k1 = rhs(v)
    k2 = rhs(v + 0.5 * dt * k1)
    k3 = rhs(v + 0.5 * dt * k2)
    k4 = rhs(v + dt * k3)
    return v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(**_OPTS)
def _logistic_rhs_into(w, a, P, out):
    # P already holds w with its halo
    for i in range(w.shape[0]):
        for j in range(w.shape[1]):
            x = P[i + 1, j + 1]
            lap = ((P[i + 2, j + 1] - x) + (P[i, j + 1] - x) + (P[i + 1, j + 2] - x)
                   + (P[i + 1, j] - x) + (P[i + 2, j + 2] - x) + (P[i, j] - x))
            out[i, j] = lap / 6.0 + a * x * (1.0 - x)


@njit(**_OPTS)
def rk4_logistic_step_numba(v, a, dt, periodic):
    n0 = v.shape[0]
    n1 = v.shape[1]
    P = np.empty((n0 + 2, n1 + 2))
    k1 = np.empty_like(v)
    k2 = np.empty_like(v)
    k3 = np.empty_like(v)
    k4 = np.empty_like(v)
    tmp = np.empty_like(v)
    _fill_halo(v, P, periodic)
    _logistic_rhs_into(v, a, P, k1)
    for i in range(n0):
        for j in range(n1):
            tmp[i, j] = v[i, j] + 0.5 * dt * k1[i, j]
    _fill_halo(tmp, P, periodic)
    _logistic_rhs_into(tmp, a, P, k2)
    for i in range(n0):
        for j in range(n1):
            tmp[i, j] = v[i, j] + 0.5 * dt * k2[i, j]
    _fill_halo(tmp, P, periodic)
    _logistic_rhs_into(tmp, a, P, k3)
    for i in range(n0):
        for j in range(n1):
            tmp[i, j] = v[i, j] + dt * k3[i, j]
    _fill_halo(tmp, P, periodic)
    _logistic_rhs_into(tmp, a, P, k4)
    out = np.empty_like(v)
    for i in range(n0):
        for j in range(n1):
            out[i, j] = v[i, j] + dt / 6.0 * (
                k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    return out


if HAVE_NUMBA:
    exp_scan = exp_scan_numba
    shift_sum = shift_sum_numba
    hex_laplacian = hex_laplacian_numba
    rk4_logistic_step = rk4_logistic_step_numba
    BACKEND = "numba"
else:
    exp_scan = exp_scan_numpy
    shift_sum = shift_sum_numpy
    hex_laplacian = hex_laplacian_numpy
    rk4_logistic_step = rk4_logistic_step_numpy
    BACKEND = "numpy"
