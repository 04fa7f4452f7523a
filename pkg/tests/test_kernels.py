"""The numba kernels and their numpy twins must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexkpp import _kernels as K

rng = np.random.default_rng(42)


def loop_scan(h, decay, w0, w1, seed):
    out = [seed]
    for k in range(len(h) - 1):
        out.append(decay * out[-1] + (w0 * h[k] + w1 * h[k + 1]))
    return np.array(out)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3000), st.floats(0.5, 0.9999), st.floats(-2, 2))
def test_exp_scan_backends_match_loop_exactly(n, decay, seed):
    h = np.random.default_rng(n).random(n)
    ref = loop_scan(h, decay, 0.3, 0.2, seed)
    np.testing.assert_array_equal(K.exp_scan_numba(h, decay, 0.3, 0.2, seed), ref)
    np.testing.assert_array_equal(K.exp_scan_numpy(h, decay, 0.3, 0.2, seed), ref)


def test_shift_sum_backends_agree():
    pad, n = 10, 500
    P = rng.random(n + 2 * pad)
    offsets = np.array([-3, 0, 2, 5, -7, 1], dtype=np.int64)
    fracs = rng.random(6)
    np.testing.assert_allclose(K.shift_sum_numba(P, pad, offsets, fracs, n),
                               K.shift_sum_numpy(P, pad, offsets, fracs, n), rtol=1e-15)


@pytest.mark.parametrize("periodic", [False, True])
@pytest.mark.parametrize("shape", [(7, 7), (31, 31), (5, 9)])
def test_stencil_backends_agree(periodic, shape):
    v = rng.random(shape)
    np.testing.assert_array_equal(K.hex_laplacian_numba(v, periodic),
                                  K.hex_laplacian_numpy(v, periodic))


@pytest.mark.parametrize("periodic", [False, True])
def test_rk4_backends_agree(periodic):
    v = rng.random((41, 41))
    np.testing.assert_array_equal(K.rk4_logistic_step_numba(v, 200.0, 5e-4, periodic),
                                  K.rk4_logistic_step_numpy(v, 200.0, 5e-4, periodic))


def test_fused_step_matches_generic_rhs():
    from hexkpp.growth import GrowthFunction, logistic
    from hexkpp.hexsim import rk4_step
    v = rng.random((21, 21))
    lg = logistic(3.0)
    generic = GrowthFunction(lg.func, lg.fprime0, lg.fprime1, lg.N, lg.theta)
    np.testing.assert_allclose(rk4_step(v, lg, 0.01, False), rk4_step(v, generic, 0.01, False),
                               rtol=1e-14, atol=1e-15)


def test_environment_flag_selects_numpy():
    env = dict(os.environ, HEXKPP_DISABLE_NUMBA="1")
    code = "from hexkpp import _kernels as K; print(K.BACKEND, K.HAVE_NUMBA)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out == ["numpy", "False"]


def test_default_backend():
    flag = os.environ.get("HEXKPP_DISABLE_NUMBA", "")
    if flag.strip().lower() in ("", "0", "false", "no"):
        assert K.BACKEND == "numba"
    else:
        assert K.BACKEND == "numpy"
