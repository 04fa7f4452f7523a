import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexkpp import dispersion as disp

angles = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
rates = st.floats(min_value=0.01, max_value=8.0)
growths = st.floats(min_value=0.1, max_value=50.0)


def brute_force_speed(g, lo=1e-3, hi=12.0, n=400_001):
    lam = np.linspace(lo, hi, n)
    r = g(lam) / lam
    k = int(np.argmin(r))
    return float(r[k]), float(lam[k])


def hex_g(lam, alpha, f0):
    # g written directly from the six unit neighbour vectors of the hexagonal lattice
    e = np.array([math.cos(alpha), math.sin(alpha)])
    total = 0.0
    for k in range(6):
        t = k * math.pi / 3
        total = total + np.exp(lam * (math.cos(t) * e[0] + math.sin(t) * e[1]))
    return total / 6.0 - 1.0 + f0


def test_g_example_values():
    # (cosh 1 + 2 cosh 1/2)/3 - 1
    assert disp.g_value(1.0, 0.0, 0.0) == pytest.approx(0.2661108553, abs=1e-9)
    assert disp.big_g(100.0, 1.0, 0.0, 10.0) == pytest.approx(100 - 10 - 0.2661108553,
                                                               abs=1e-9)


@given(rates, angles, growths)
def test_g_matches_neighbour_sum(lam, alpha, f0):
    a = disp.g_value(lam, alpha, f0)
    assert a == pytest.approx(hex_g(lam, alpha, f0), rel=1e-12, abs=1e-12)
    assert a == pytest.approx(disp.g_value_exponential(lam, alpha, f0), rel=1e-12, abs=1e-12)


def test_g_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        disp.g_value(0.0, 0.0, 1.0)


def test_g_vectorised_matches_scalar():
    lam = np.array([0.5, 1.0, 3.0])
    vec = disp.g_value(lam, 0.3, 2.0)
    assert vec == pytest.approx([disp.g_value(x, 0.3, 2.0) for x in lam], rel=1e-15)


@pytest.mark.parametrize("alpha", [0.0, math.pi / 12, math.pi / 6, 1.0])
@pytest.mark.parametrize("f0", [1.0, 10.0])
def test_minimal_speed_against_brute_force(alpha, f0):
    res = disp.minimal_speed(alpha, f0)
    c, lam = brute_force_speed(lambda x: hex_g(x, alpha, f0))
    assert res.c_star == pytest.approx(c, abs=1e-8)
    assert res.lambda_star == pytest.approx(lam, abs=1e-3)
    # tangency: G(c*, lambda*) = 0 with zero slope
    assert disp.big_g(res.c_star, res.lambda_star, alpha, f0) == pytest.approx(0.0, abs=1e-10)
    assert res.c_star - disp.g_prime(res.lambda_star, alpha) == pytest.approx(0.0, abs=1e-9)


def test_known_speeds():
    assert disp.minimal_speed(0.0, 10.0).c_star == pytest.approx(4.627193523, abs=1e-8)
    assert disp.minimal_speed(math.pi / 6, 10.0).c_star == pytest.approx(4.5876727, abs=1e-6)
    assert disp.minimal_speed(0.0, 1.0).c_star == pytest.approx(1.0942248, abs=1e-6)


@settings(max_examples=40)
@given(angles, growths)
def test_speed_symmetries(alpha, f0):
    c = disp.minimal_speed(alpha, f0).c_star
    assert disp.minimal_speed(alpha + math.pi / 3, f0).c_star == pytest.approx(c, rel=1e-12)
    assert disp.minimal_speed(-alpha, f0).c_star == pytest.approx(c, rel=1e-12)


@settings(max_examples=40)
@given(angles)
def test_speed_grows_with_linear_rate(alpha):
    assert disp.minimal_speed(alpha, 2.0).c_star < disp.minimal_speed(alpha, 3.0).c_star


def test_minimal_speed_rejects_bad_input():
    with pytest.raises(ValueError):
        disp.minimal_speed(0.0, 0.0)
    with pytest.raises(ValueError):
        disp.minimal_speed(0.0, 1.0, tol=0.0)


def test_grid_search_is_an_upper_bound():
    for a in np.linspace(0, math.pi / 3, 7):
        exact = disp.minimal_speed(a, 10.0).c_star
        grid = disp.grid_minimal_speed(a, 10.0).c_star
        assert exact <= grid + 1e-15
        assert grid - exact < 1e-3


def test_decay_roots_classification():
    cs = disp.minimal_speed(0.2, 5.0).c_star
    two = disp.decay_roots(1.3 * cs, 0.2, 5.0)
    assert two.variant == "TwoRoots"
    assert two.lambda1 < two.lambda_star < two.lambda2
    for lam in (two.lambda1, two.lambda2):
        assert disp.big_g(1.3 * cs, lam, 0.2, 5.0) == pytest.approx(0.0, abs=1e-10)
    assert disp.decay_roots(cs, 0.2, 5.0).variant == "Tangent"
    assert disp.decay_roots(0.5 * cs, 0.2, 5.0).variant == "NoRoot"
    with pytest.raises(ValueError):
        disp.decay_roots(0.0, 0.2, 5.0)


def test_lambda_zero_is_the_negative_root():
    c = 1.2
    lam0 = disp.lambda_zero(c, 0.0, -1.0)
    assert lam0 < 0
    d = disp.Direction.from_angle(0.0).delta
    val = c * lam0 - sum(math.cosh(x * lam0) for x in d) / 3 + 1 + 1.0
    assert val == pytest.approx(0.0, abs=1e-11)
    with pytest.raises(ValueError):
        disp.lambda_zero(c, 0.0, 0.5)


def test_phi_low_orders_vanish():
    a = np.linspace(0, 2 * math.pi, 257)
    assert np.max(np.abs(disp.phi(0, a))) < 1e-14
    assert np.max(np.abs(disp.phi(1, a))) < 1e-14
    assert disp.phi(2, 0.3) < 0


@given(rates, angles)
def test_closed_derivative_matches_finite_difference(lam, alpha):
    eps = 1e-6
    fd = (disp.g_value(lam, alpha + eps, 1.0) - disp.g_value(lam, alpha - eps, 1.0)) / (2 * eps)
    closed = disp.dg_dalpha_closed(lam, alpha)
    assert closed == pytest.approx(fd, abs=1e-7 * max(1.0, math.exp(lam)))


def test_series_converges_to_closed_form():
    for terms, tol in ((5, 1e-2), (20, 1e-9)):
        err = abs(disp.dg_dalpha_series(2.0, 0.4, terms) - disp.dg_dalpha_closed(2.0, 0.4))
        assert err < tol


def test_series_rejects_bad_arguments():
    with pytest.raises(ValueError):
        disp.dg_dalpha_series(1.0, 0.0, 0)
    with pytest.raises(ValueError):
        disp.dg_dalpha_closed(-1.0, 0.0)


def test_curve_extrema_on_sampled_curve():
    a = np.arange(360) * math.pi / 180
    c = [r.c_star for r in disp.speed_curve(a, 10.0)]
    mx, mn = disp.curve_extrema(a, c)
    assert [round(math.degrees(a[k])) for k in mx] == [0, 60, 120, 180, 240, 300]
    assert [round(math.degrees(a[k])) for k in mn] == [30, 90, 150, 210, 270, 330]
    with pytest.raises(ValueError):
        disp.speed_curve([], 1.0)


@pytest.mark.parametrize("beta", [0.0, 0.3, math.pi / 4])
def test_square_speed_against_brute_force(beta):
    c, nu = disp.square_minimal_speed(beta, 10.0)
    ref, _ = brute_force_speed(lambda x: disp.square_g(x, beta, 10.0))
    assert c == pytest.approx(ref, abs=1e-8)


def test_square_speed_extremes():
    c0, _ = disp.square_minimal_speed(0.0, 10.0)
    c45, _ = disp.square_minimal_speed(math.pi / 4, 10.0)
    assert c45 < c0
    assert disp.square_minimal_speed(math.pi / 2, 10.0)[0] == pytest.approx(c0, rel=1e-13)
