import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from ftlab.models import DomainError, make_model
from ftlab.riemann import (blend_defect, cutoff_phi, cutoff_phi_deriv, discretize_rarefaction,
                           exact_edge_speeds, front_speed, interp_curve, rarefaction_mean_speed,
                           solve_riemann, solve_riemann_w)

ISO = make_model("isothermal")
BURGERS = make_model("burgers")


def lax_middle_density(rho_l, v_l, rho_r, v_r):
    """Exact isothermal middle state from the textbook Lax curves in (rho, v)."""
    def forward(rho):
        if rho <= rho_l:
            return v_l - math.log(rho / rho_l)
        return v_l - (rho - rho_l) / math.sqrt(rho * rho_l)

    def backward(rho):
        if rho <= rho_r:
            return v_r + math.log(rho / rho_r)
        return v_r + (rho - rho_r) / math.sqrt(rho * rho_r)

    rho = brentq(lambda r: forward(r) - backward(r), 1e-8, 1e4, xtol=1e-15, rtol=1e-15)
    return rho, forward(rho)


def test_cutoff_examples():
    assert cutoff_phi(-3.0) == 1.0
    assert cutoff_phi(-2.0) == 1.0
    assert cutoff_phi(-1.0) == 0.0
    assert cutoff_phi(0.5) == 0.0
    assert cutoff_phi(-1.5) == pytest.approx(0.5)
    s = np.linspace(-3.0, 0.0, 301)
    vals = cutoff_phi(s)
    assert np.all(np.diff(vals) <= 0)
    h = 1e-6
    np.testing.assert_allclose(cutoff_phi_deriv(s), (cutoff_phi(s + h) - cutoff_phi(s - h)) / (2 * h),
                               atol=1e-5)


def test_interp_curve_cases():
    base = np.array([1.0, 0.0])
    # far from the blend zone: exact shock curve
    np.testing.assert_allclose(interp_curve(ISO, 1, base, -0.5, 1e-3), ISO.shock_curve(1, base, -0.5),
                               rtol=1e-13)
    # weak shocks: pure rarefaction-curve extension
    extension = ISO.from_riemann(ISO.advance(1, tuple(ISO.to_riemann(base)), -0.01))
    np.testing.assert_allclose(interp_curve(ISO, 1, base, -0.01, 1e-3), extension, rtol=1e-13)
    # rarefactions never blend
    np.testing.assert_allclose(interp_curve(ISO, 2, base, 0.3, 1e-3), ISO.rarefaction_curve(2, base, 0.3),
                               rtol=1e-13)
    # the blend lies between the two branches
    nu = 1e-2
    sigma = -1.5 * math.sqrt(nu)
    mid = interp_curve(ISO, 1, base, sigma, nu)
    shock = ISO.shock_curve(1, base, sigma)
    fan = ISO.from_riemann(ISO.advance(1, tuple(ISO.to_riemann(base)), sigma))
    # the defect is a common shift of both Riemann coordinates, i.e. a velocity shift
    assert mid[0] == pytest.approx(shock[0], rel=1e-14)
    lo, hi = sorted([shock[1], fan[1]])
    assert lo < mid[1] < hi


def test_identity_and_single_waves():
    wl = (0.1, 0.4)
    fan = solve_riemann_w(ISO, 1e-2, wl, wl)
    assert fan.sigmas == (0.0, 0.0) and fan.waves == []
    fan = solve_riemann_w(ISO, 1e-2, wl, (0.3, 0.4))
    assert fan.sigma1 == pytest.approx(0.2) and fan.sigma2 == pytest.approx(0.0, abs=1e-15)
    assert all(w.family == 1 for w in fan.waves)


@given(st.floats(0.3, 3.0), st.floats(-1.0, 1.0), st.floats(0.3, 3.0), st.floats(-1.0, 1.0))
def test_exact_middle_state_matches_lax_curves(rho_l, v_l, rho_r, v_r):
    left, right = np.array([rho_l, rho_l * v_l]), np.array([rho_r, rho_r * v_r])
    fan = solve_riemann_w(ISO, 0.0, ISO.to_riemann(left), ISO.to_riemann(right), fan=False)
    rho_m, v_m = lax_middle_density(rho_l, v_l, rho_r, v_r)
    mid = ISO.from_riemann(fan.w_mid)
    assert mid[0] == pytest.approx(rho_m, rel=1e-9)
    assert mid[1] / mid[0] == pytest.approx(v_m, abs=1e-9)


@given(st.floats(0.3, 3.0), st.floats(-1.0, 1.0), st.floats(0.3, 3.0), st.floats(-1.0, 1.0),
       st.sampled_from([1e-2, 1e-3]))
def test_fan_composes_to_right_state(rho_l, v_l, rho_r, v_r, nu):
    wl = tuple(ISO.to_riemann([rho_l, rho_l * v_l]))
    wr = tuple(ISO.to_riemann([rho_r, rho_r * v_r]))
    fan = solve_riemann_w(ISO, nu, wl, wr)
    wm = ISO.advance(1, wl, fan.sigma1, blend_defect(ISO, fan.sigma1, nu))
    back = ISO.advance(2, wm, fan.sigma2, blend_defect(ISO, fan.sigma2, nu))
    np.testing.assert_allclose(back, wr, atol=1e-11)
    # telescoping: consecutive waves share states and speeds are ordered
    for a, b in zip(fan.waves[:-1], fan.waves[1:]):
        np.testing.assert_allclose(a.right, b.left, atol=1e-12)
        assert a.speed <= b.speed + 1e-12
    np.testing.assert_allclose(fan.waves[0].left if fan.waves else wl, wl)


def test_discretization_example():
    waves = discretize_rarefaction(BURGERS, 0.1, 1, (0.15,), 0.32)
    edges = [w.left[0] for w in waves] + [waves[-1].right[0]]
    np.testing.assert_allclose(edges, [0.15, 0.2, 0.3, 0.4, 0.47])
    np.testing.assert_allclose([w.speed for w in waves], [0.15, 0.25, 0.35, 0.45])
    assert sum(w.sigma for w in waves) == pytest.approx(0.32)
    with pytest.raises(ValueError):
        discretize_rarefaction(BURGERS, 0.0, 1, (0.0,), 0.1)
    with pytest.raises(ValueError):
        discretize_rarefaction(BURGERS, 0.1, 1, (0.0,), -0.1)


def test_front_speed_blends_between_branches():
    nu = 1e-2
    wl = (0.2, 0.6)
    assert front_speed(ISO, nu, 1, wl, -0.5) == ISO.shock_speed_w(1, wl, -0.5)
    assert front_speed(ISO, nu, 1, wl, -0.05) == rarefaction_mean_speed(ISO, nu, 1, wl, -0.05)
    sigma = -0.15
    lo, hi = sorted([ISO.shock_speed_w(1, wl, sigma), rarefaction_mean_speed(ISO, nu, 1, wl, sigma)])
    assert lo <= front_speed(ISO, nu, 1, wl, sigma) <= hi
    with pytest.raises(ValueError):
        front_speed(ISO, nu, 1, wl, 0.1)


def test_burgers_exact_shock_speed():
    fan = solve_riemann(BURGERS, 1e-2, [1.0], [-1.0])
    assert len(fan.waves) == 1 and fan.waves[0].speed == 0.0


def test_two_shock_edges():
    # two colliding streams produce two shocks with known speeds
    left, right = np.array([1.0, 1.0]), np.array([1.0, -1.0])
    s1, s2, wm, e1, e2 = exact_edge_speeds(ISO, left, right)
    rho_m, v_m = lax_middle_density(1.0, 1.0, 1.0, -1.0)
    assert v_m == pytest.approx(0.0, abs=1e-12)
    assert s1 < 0 and s2 < 0
    assert e1 == pytest.approx(1.0 - math.sqrt(rho_m), rel=1e-10)
    assert e2 == pytest.approx(-1.0 + math.sqrt(rho_m), rel=1e-10)


def test_vacuum_middle_state_raises():
    with pytest.raises(DomainError):
        solve_riemann(ISO, 1e-2, [1.0, -20.0], [1.0, 20.0])
