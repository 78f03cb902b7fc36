import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftlab.dissipation import (build_pi_geometry, d_cont, d_rh, grad_tilde_eta, make_frame, maximal_shock,
                               negativity_scan, overtaking_G, overtaking_root, quantified_identity_residual,
                               shift_functional, shock_family_curve, tilde_eta, wave_ratio_function,
                               weighted_rel_entropy)
from ftlab.fronttrack import Profile
from ftlab.models import DomainError, make_model
from ftlab.riemann import solve_riemann_w

ISO = make_model("isothermal")
BURGERS = make_model("burgers")
U_L = np.array([1.0, 0.0])


@pytest.fixture(scope="module")
def frame():
    return make_frame(ISO, U_L, 0.05, 20.0)


@pytest.fixture(scope="module")
def geom(frame):
    return build_pi_geometry(frame, K_ball=0.5, n_rays=180)


def test_frame_separates_end_states(frame):
    assert frame.weight_ratio == pytest.approx(2.0)
    assert tilde_eta(frame, frame.u_L) == pytest.approx(-ISO.rel_entropy(frame.u_L, frame.u_R))
    assert tilde_eta(frame, frame.u_R) == pytest.approx(2.0 * ISO.rel_entropy(frame.u_R, frame.u_L))
    assert tilde_eta(frame, frame.u_L) < 0 < tilde_eta(frame, frame.u_R)
    arc = make_frame(ISO, U_L, 0.05, 20.0, strength="arclength")
    assert np.linalg.norm(arc.u_R - arc.u_L) == pytest.approx(0.05, rel=1e-12)
    with pytest.raises(ValueError):
        make_frame(ISO, U_L, 0.05, 20.0, strength="mass")


def test_gradient_matches_finite_differences(frame):
    u = np.array([1.02, 0.01])
    h = 1e-6
    fd = [(tilde_eta(frame, u + h * e) - tilde_eta(frame, u - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(grad_tilde_eta(frame, u), fd, rtol=1e-7, atol=1e-9)


def test_d_cont_forms_agree(frame, rng):
    U = np.column_stack([rng.uniform(0.9, 1.1, 200), rng.uniform(-0.1, 0.1, 200)])
    np.testing.assert_allclose(d_cont(frame, U), d_cont(frame, U, form="definition"), atol=1e-14)


def test_d_rh_cases(frame):
    assert d_rh(frame, frame.u_L, frame.u_R, frame.sigma_LR) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        d_rh(frame, frame.u_L, np.array([1.2, 0.3]), 0.0)
    with pytest.raises(DomainError):
        d_rh(frame, frame.u_L, frame.u_R, frame.sigma_LR + 0.1)
    # the vanishing shock recovers the continuous dissipation
    u = np.array([1.01, 0.005])
    gaps = []
    for s in (1e-2, 1e-3, 1e-4):
        S, sig = shock_family_curve(ISO, 1, u, s)
        gaps.append(abs(d_rh(frame, u, S, sig) - d_cont(frame, u)))
    assert gaps[2] < gaps[1] < gaps[0] and gaps[2] < 1e-5


@given(st.floats(0.5, 2.0), st.floats(-0.5, 0.5), st.floats(0.5, 2.0), st.floats(-0.5, 0.5),
       st.floats(0.0, 1.0), st.sampled_from([1, 2]))
def test_entropy_identity_along_shock_curves(r1, v1, r2, v2, s, family):
    res = quantified_identity_residual(ISO, np.array([r1, r1 * v1]), np.array([r2, r2 * v2]), family, s)
    assert res <= 1e-10


def test_geometry(frame, geom):
    assert geom.in_pi(frame.u_L) and not geom.in_pi(frame.u_R)
    assert np.max(np.abs(tilde_eta(frame, geom.boundary))) < 1e-12
    assert d_cont(frame, geom.u_star) >= d_cont(frame, geom.boundary).max() - 1e-14
    assert geom.r_ball == pytest.approx(0.5 / 20.0)
    assert geom.in_pi_star(geom.u_star)
    lo, hi = geom.bounding_box()
    assert np.all(lo <= geom.boundary.min(axis=0)) and np.all(hi >= geom.boundary.max(axis=0))
    with pytest.raises(ValueError):
        build_pi_geometry(make_frame(ISO, U_L, 0.05, -20.0 / 0.05 - 1.0))


def test_pi_shrinks_with_shock_strength():
    # with C s0 fixed the weight ratio is fixed and Pi scales with the jump
    diam = [build_pi_geometry(make_frame(ISO, U_L, s0, 1.0 / s0), n_rays=90).diameter for s0 in (0.04, 0.02)]
    assert 0.4 < diam[1] / diam[0] < 0.6


def test_maximal_shock(frame, geom):
    s, up = maximal_shock(geom, frame.u_R)
    assert s == 0.0 and np.array_equal(up, frame.u_R)
    u = frame.u_L
    s, up = maximal_shock(geom, u)
    assert s > 0
    assert ISO.rel_entropy(u, up) == pytest.approx(-tilde_eta(frame, u), rel=1e-10)
    # D_RH along the curve peaks at s*
    vals = []
    for t in (0.9 * s, s, 1.1 * s):
        S, sig = shock_family_curve(ISO, 1, u, t)
        vals.append(d_rh(frame, u, S, sig))
    assert vals[1] >= max(vals[0], vals[2])


def test_weighted_rel_entropy_closed_form():
    eps = 0.1
    u = Profile(BURGERS, [0.0, 0.5], [(0.0,), (eps,), (0.0,)])
    zero = Profile(BURGERS, [], [(0.0,)])
    # scalar eta = u^2 / 2
    assert weighted_rel_entropy(BURGERS, u, zero, interval=(-1, 1)) == pytest.approx(0.25 * eps ** 2)
    weight = (np.array([0.25]), np.array([1.0, 3.0]))
    assert weighted_rel_entropy(BURGERS, u, zero, weight, (-1, 1)) == pytest.approx(
        0.5 * eps ** 2 * (0.25 + 3 * 0.25))


def test_shift_functional_closed_form():
    frame = make_frame(BURGERS, np.array([1.0]), 0.5, 0.0)
    u = Profile(BURGERS, [0.0], [(1.0,), (0.5,)])
    assert shift_functional(BURGERS, u, frame, 1.0, 1.0, 0.0) == pytest.approx(0.0)
    # shift sits 0.1 left of the jump: the cell (-0.1, 0) is compared with u_R = 0.5
    assert shift_functional(BURGERS, u, frame, 1.0, 2.0, -0.1) == pytest.approx(2.0 * 0.1 * 0.125)


def test_wave_ratio_function_branches():
    assert wave_ratio_function(1.0) == 0.0
    assert wave_ratio_function(4.0) == pytest.approx(1.5)
    assert wave_ratio_function(math.e ** -1) == pytest.approx(-1.0)
    x = np.linspace(0.2, 5.0, 200)
    assert np.all(np.diff(wave_ratio_function(x)) > 0)


def test_overtaking_roots():
    assert overtaking_root(1.0, 1.0) == (1.0, 1.0)
    B, F = overtaking_root(math.e, math.e)
    assert B == pytest.approx(6.6468, abs=5e-5) and F == pytest.approx(1.1117, abs=5e-5)
    assert B * F == pytest.approx(math.e ** 2, rel=1e-14)
    assert abs(overtaking_G(B, math.e, math.e)) < 1e-13


@pytest.mark.parametrize("b, bb", [(math.e, math.e), (1.5, 4.0), (3.0, 1.2)])
def test_overtaking_root_matches_exact_riemann_solver(b, bb):
    # two 1-shocks with density ratios b, bb; outgoing ratios from the exact fan of the outer states
    w0 = (0.0, 0.0)
    w1 = ISO.advance(1, w0, -2 * math.log(b), ISO.curve_defect(-2 * math.log(b)))
    w2 = ISO.advance(1, w1, -2 * math.log(bb), ISO.curve_defect(-2 * math.log(bb)))
    fan = solve_riemann_w(ISO, 0.0, w0, w2, fan=False)
    rho = lambda w: ISO.from_riemann(w)[0]
    B, F = overtaking_root(b, bb)
    assert B == pytest.approx(rho(fan.w_mid) / rho(w0), rel=1e-10)
    assert F == pytest.approx(rho(w2) / rho(fan.w_mid), rel=1e-10)


@given(st.floats(1.0, 20.0), st.floats(1.0, 20.0))
def test_overtaking_root_brackets(b, bb):
    B, F = overtaking_root(b, bb)
    assert max(b, bb) <= B <= b * bb * (1 + 1e-14)
    assert F >= 1.0 - 1e-12


def test_quick_negativity_scan(frame, geom):
    out = negativity_scan(frame, K_ball=0.5, n_grid=12, n_s=6, geom=geom)
    assert out["all_negative"]
    assert out["K_cont"] > 0 and out["K_rh"] > 0
    assert out["n_states"] > 0


def test_flux_convexity_spot_check(iso, burgers):
    from ftlab.dissipation import flux_convexity_check
    assert flux_convexity_check(burgers, 1, [1.0], [[0.3], [2.0]]) == pytest.approx(1.0, abs=1e-6)
    # l . f is convex but degenerate along rays (rho, m) -> t (rho, m)
    states = [[1.0, 0.0], [2.0, 1.0], [0.5, -0.3]]
    for fam in (1, 2):
        assert flux_convexity_check(iso, fam, [1.0, 0.0], states) == pytest.approx(0.0, abs=1e-5)
