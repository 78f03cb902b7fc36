import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftlab.fronttrack import (BudgetExceeded, Front, Profile, evolve, glimm_functionals, init_fronts,
                              interaction_class, next_interaction, resolve_interaction)
from ftlab.harness import K0_FIT, fit_interaction_constant, random_profile
from ftlab.models import make_model
from ftlab.riemann import blend_defect

ISO = make_model("isothermal")
BURGERS = make_model("burgers")


def front(fid, x, speed, family=1, sigma=-0.1, left=(0.0, 0.0), right=(0.0, 0.0)):
    return Front(fid, x, 0.0, speed, family, sigma, left, right)


def test_init_single_jump_gives_fan():
    data = Profile(BURGERS, [0.0], [(0.0,), (0.35,)])
    sol = init_fronts(BURGERS, 0.1, data)
    assert [f.sigma for f in sol.fronts] == pytest.approx([0.1, 0.1, 0.1, 0.05])
    assert all(f.x0 == 0.0 for f in sol.fronts)
    data = Profile(BURGERS, [0.0], [(1.0,), (0.0,)])
    sol = init_fronts(BURGERS, 0.1, data)
    assert len(sol.fronts) == 1 and sol.fronts[0].speed == 0.5


def test_init_drops_trivial_jumps_and_v_adds_up():
    data = Profile(ISO, [0.0, 0.5, 1.0], [(0.0, 0.0), (0.0, 0.0), (-0.1, 0.05), (-0.1, 0.0)])
    sol = init_fronts(ISO, 1e-2, data)
    assert len(sol.fronts) >= 2
    v_sum = 0.0
    for jl, jr in ((data.states[1], data.states[2]), (data.states[2], data.states[3])):
        sub = init_fronts(ISO, 1e-2, Profile(ISO, [0.0], [jl, jr]))
        v_sum += sub.glimm().V
    assert sol.glimm().V == pytest.approx(v_sum, rel=1e-14)


def test_next_interaction_example():
    fronts = [front(0, 0.0, 1.0), front(1, 1.0, -1.0)]
    ts, xs, ids = next_interaction(fronts)
    assert (ts, xs, ids) == (pytest.approx(0.5), pytest.approx(0.5), (0, 1))
    assert next_interaction([front(0, 0.0, 1.0), front(1, 1.0, 1.0)]) is None
    assert next_interaction([front(0, 0.0, 1.0)]) is None


def test_three_fronts_meeting_are_nudged_and_logged():
    data = Profile(BURGERS, [-1.0, 0.0, 1.0], [(2.0,), (1.0,), (0.0,), (-1.0,)])
    # shock speeds 1.5, 0.5, -0.5 all reach x = 0.5 at t = 1
    sol = init_fronts(BURGERS, 0.1, data)
    evolve(sol, 2.0)
    assert sol.perturbations
    assert all(abs(p["dspeed"]) <= 1e-9 for p in sol.perturbations)
    assert len(sol.fronts) == 1
    assert sol.fronts[0].sigma == pytest.approx(-3.0)
    assert sol.fronts[0].position(2.0) == pytest.approx(0.5 + 0.5 * 1.0, abs=1e-6)


def test_interaction_classes():
    assert interaction_class([(2, -0.1), (1, -0.1)]) == "head-on"
    assert interaction_class([(1, -0.1), (1, 0.1)]) == "overtake-1SR"
    assert interaction_class([(2, 0.1), (2, -0.1)]) == "overtake-2RS"
    assert interaction_class([(1, -0.1), (1, -0.1), (2, 0.2)]) == "multi"


def test_head_on_shocks_pass_through():
    nu = 1e-3
    w0 = (0.0, 0.0)
    w1 = ISO.advance(2, w0, -0.3, blend_defect(ISO, -0.3, nu))
    w2 = ISO.advance(1, w1, -0.2, blend_defect(ISO, -0.2, nu))
    incoming = [Front(0, 0.0, 0.0, 1.0, 2, -0.3, w0, w1), Front(1, 0.0, 0.0, -1.0, 1, -0.2, w1, w2)]
    out, fan = resolve_interaction(ISO, nu, incoming, 0.0, 0.0)
    assert fan.sigma1 == pytest.approx(-0.2, abs=1e-12)
    assert fan.sigma2 == pytest.approx(-0.3, abs=1e-12)
    assert [f.family for f in out] == [1, 2]


def test_two_shocks_of_one_family_merge():
    incoming = [Front(0, 0.0, 0.0, 0.9, 1, -0.2, (1.0,), (0.8,)),
                Front(1, 0.0, 0.0, 0.65, 1, -0.3, (0.8,), (0.5,))]
    out, fan = resolve_interaction(BURGERS, 1e-2, incoming, 1.0, 0.0)
    assert len(out) == 1
    assert out[0].sigma == pytest.approx(-0.5) and out[0].speed == pytest.approx(0.75)
    with pytest.raises(ValueError):
        resolve_interaction(BURGERS, 1e-2, incoming[:1])


def test_glimm_examples():
    g = glimm_functionals([front(0, 0.0, 0.0, 1, -0.5)])
    assert (g.V, g.Q) == (0.5, 0.0)
    g = glimm_functionals([front(0, 0.0, 0.0, 2, 0.2), front(1, 1.0, 0.0, 1, -0.3)], kappa=2.0)
    assert g.V == pytest.approx(0.5) and g.Q == pytest.approx(0.06) and g.U == pytest.approx(0.62)
    # separating pair contributes nothing; two rarefactions of one family never approach
    g = glimm_functionals([front(0, 0.0, 0.0, 1, -0.3), front(1, 1.0, 0.0, 2, 0.2)])
    assert g.Q == 0.0
    g = glimm_functionals([front(0, 0.0, 0.0, 1, 0.3), front(1, 1.0, 0.0, 1, 0.2)])
    assert g.Q == 0.0
    assert glimm_functionals([]).U == 0.0


def test_sample_and_range():
    data = Profile(BURGERS, [0.0], [(1.0,), (0.0,)])
    sol = init_fronts(BURGERS, 0.1, data)
    evolve(sol, 1.0)
    prof = sol.sample(1.0)
    np.testing.assert_allclose(prof.x, [0.5])
    assert prof(0.4)[0] == 1.0 and prof(0.6)[0] == 0.0
    with pytest.raises(ValueError):
        sol.sample(1.5)
    with pytest.raises(ValueError):
        evolve(sol, 0.5)


def test_event_log_is_jsonl():
    rng = np.random.default_rng(3)
    sol = init_fronts(ISO, 1e-2, random_profile(ISO, rng, 4, 0.1, (-0.05, 0.05)))
    evolve(sol, 1.0)
    lines = sol.event_log_jsonl().splitlines()
    assert len(lines) == len(sol.events) > 0
    assert {"t", "x", "dU", "class"} <= set(json.loads(lines[0]))


def test_budget():
    rng = np.random.default_rng(3)
    sol = init_fronts(ISO, 1e-2, random_profile(ISO, rng, 4, 0.1, (-0.05, 0.05)), budget=1)
    with pytest.raises(BudgetExceeded):
        evolve(sol, 1.0)


@given(st.integers(0, 10 ** 6))
def test_glimm_functional_never_increases(seed):
    rng = np.random.default_rng(seed)
    data = random_profile(ISO, rng, 3, 0.02, (-0.02, 0.02))
    sol = init_fronts(ISO, 1e-3, data, kappa=0.063)
    evolve(sol, 1.0)
    for ev in sol.events:
        assert ev.dU <= 1e-12
        assert ev.dV <= 1e-12 or ev.dQ < 0


def test_interaction_constant_below_fit():
    k0, n = fit_interaction_constant(ISO, 1e-3, n=200, amplitude=0.05, seed=1)
    assert n == 200 and 0 < k0 <= K0_FIT
