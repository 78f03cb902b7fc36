import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftlab.fronttrack import Profile, evolve, init_fronts
from ftlab.harness import random_profile
from ftlab.models import make_model
from ftlab.weight import WeightError, verify_weight, weight_iso, weight_smallbv

ISO = make_model("isothermal")
BURGERS = make_model("burgers")


def run(model, nu, x, states, T=1.0, **kw):
    sol = init_fronts(model, nu, Profile(model, x, states), **kw)
    evolve(sol, T)
    return sol


def test_no_waves_gives_unit_weight():
    sol = run(ISO, 1e-2, [], [(0.1, 0.2)])
    for field in (weight_smallbv(sol), weight_iso(sol)):
        assert field(np.linspace(-1, 1, 5), 0.5).tolist() == [1.0] * 5
        assert field.sup == 1.0 and field.inv_sup == 1.0


def test_small_shock_ratio():
    sol = run(BURGERS, 1e-2, [0.0], [(0.1,), (0.0,)])
    field = weight_smallbv(sol, C1=1.0)
    ep = field.epochs[0]
    assert ep.ratios()[0] == pytest.approx(math.exp(-0.075), rel=1e-14)
    assert field(-1.0, 0.0) == pytest.approx(math.exp(0.75 * 0.1), rel=1e-14)
    report = verify_weight(field, sol)
    assert report["ratio_fraction"] == 1.0


def test_large_two_shock_ratio():
    w0 = (0.0, 0.0)
    w1 = ISO.advance(2, w0, -0.4)
    sol = run(ISO, 1e-3, [0.0], [w0, w1], T=0.5)
    field = weight_iso(sol, eps=0.05, a_star=0.9)
    ep = field.epochs[-1]
    assert len(ep.shocks) == 1 and ep.shocks[0].family == 2
    assert ep.ratios()[0] == pytest.approx(1.0 / 0.9, rel=1e-14)


def test_head_on_has_no_drop():
    w0 = (0.0, 0.0)
    w1 = ISO.advance(2, w0, -0.02)
    w2 = ISO.advance(1, w1, -0.02)
    sol = run(ISO, 1e-3, [0.0, 0.1], [w0, w1, w2], T=1.0)
    assert [e.klass for e in sol.events] == ["head-on"]
    field = weight_iso(sol)
    assert field.drops == []
    assert verify_weight(field, sol)["decay_fraction"] == 1.0


def test_small_two_shocks_merging_into_large_drop():
    w0 = (0.0, 0.0)
    w1 = ISO.advance(2, w0, -0.03)
    w2 = ISO.advance(2, w1, -0.03)
    sol = run(ISO, 1e-3, [0.0, 0.005], [w0, w1, w2], T=2.0)
    assert sol.events and sol.events[0].klass == "overtake-2SS"
    field = weight_iso(sol, eps=0.05, a_star=0.9)
    assert [(d[1], d[2]) for d in field.drops] == [(0.9, "2S2S small+small->large")]
    report = verify_weight(field, sol, strict=True)
    assert report["decay_fraction"] == 1.0 and report["ratio_fraction"] == 1.0
    assert report["n_large_drops"] == 1


@given(st.integers(0, 10 ** 6), st.sampled_from(["small-bv", "isothermal"]))
def test_weight_rules_hold_on_random_runs(seed, flavor):
    rng = np.random.default_rng(seed)
    sol = init_fronts(ISO, 1e-3, random_profile(ISO, rng, 3, 0.02, (-0.02, 0.02)), kappa=0.063)
    evolve(sol, 1.0)
    field = weight_smallbv(sol) if flavor == "small-bv" else weight_iso(sol)
    report = verify_weight(field, sol)
    assert report["ratio_fraction"] == 1.0
    assert report["decay_fraction"] == 1.0


def test_strict_mode_names_the_event():
    w0 = (0.0, 0.0)
    w1 = ISO.advance(2, w0, -0.02)
    w2 = ISO.advance(1, w1, -0.02)
    sol = run(ISO, 1e-3, [0.0, 0.1], [w0, w1, w2], T=1.0)
    field = weight_iso(sol)
    field.epochs[-1].values = field.epochs[-1].values * 2.0
    with pytest.raises(WeightError, match="head-on"):
        verify_weight(field, sol, strict=True)
    assert verify_weight(field, sol)["decay_failures"][0]["class"] == "head-on"


def test_csv_header():
    sol = run(BURGERS, 1e-2, [0.0], [(0.1,), (0.0,)])
    lines = weight_smallbv(sol).to_csv().splitlines()
    assert lines[0] == "# ftlab weight field v1"
    assert lines[1] == "epoch_start_t,breakpoint_x,value"
