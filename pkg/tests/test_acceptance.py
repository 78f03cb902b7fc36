"""Acceptance criteria C1..C12 at their stated tolerances.

Each test records one "C<k> <anchor>: PASS|FAIL <summary>" line; the lines are
printed as they are produced and again in the pytest terminal summary.  Run
``python3 tests/test_acceptance.py`` to get the lines without pytest.
"""

import pytest

from ftlab.harness import (CRITERIA, RunConfig, contraction_audit, glimm_audit, holder_stability,
                           identity_audit, interaction_scan, negativity_audit, nu_convergence, seeded_runs,
                           separation_scan, sharpness_check, shifted_growth_audit, weight_audit)

RESULTS = []


def report(cid, ok, summary):
    line = f"{cid} {CRITERIA[cid]}: {'PASS' if ok else 'FAIL'} {summary}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def cfg():
    return RunConfig()


@pytest.fixture(scope="module")
def glimm_runs(cfg):
    # tight spacing so that overtaking as well as head-on interactions occur
    return seeded_runs(cfg, 100, n_jumps=3, amplitude=0.02, seed0=0, span=(-0.02, 0.02))


def test_c1_burgers_sharpness():
    ok, out = sharpness_check()
    worst = max(abs(r["initial"] - r["initial_target"]) for r in out["rows"])
    report("C1", ok, f"slope={out['slope']:.4f} initial_error={worst:.1e}")


def test_c2_glimm_decay(glimm_runs):
    (ok, c2), _ = glimm_audit(glimm_runs)
    report("C2", ok, f"events={c2['events']} max_dU={c2['max_dU']:.2e} "
                     f"max_dU_iso+product={c2['max_dU_iso_plus_product']:.2e}")


def test_c3_head_on_transparency(glimm_runs):
    _, (ok, c3) = glimm_audit(glimm_runs)
    report("C3", ok, f"head_on={c3['head_on']} max_strength_change={c3['max_strength_change']:.2e}")


def test_c4_weighted_contraction(cfg):
    ok, c4 = contraction_audit(cfg, n_pairs=50)
    worst = ", ".join(f"{k}={v:.3g}" for k, v in c4["worst_relative_growth"].items())
    report("C4", ok, f"pairs={c4['pairs']} worst relative growth {worst} (tolerance {c4['tolerance']:.0e})")


def test_c5_shifted_growth(cfg):
    ok, c5 = shifted_growth_audit(cfg, n_runs=20)
    report("C5", ok, f"runs={c5['runs']} worst_excess={c5['worst_excess']:.3g} K2_max={c5['K2_max']:.3g}")


def test_c6_weight_contract(cfg, glimm_runs):
    small = glimm_runs[:20]
    large = seeded_runs(RunConfig(nu=1e-2), 8, n_jumps=4, amplitude=0.4, seed0=100)
    ok, c6 = weight_audit(small, large, cfg)
    ok = ok and c6["large_drops"] > 0
    report("C6", ok, f"weights={c6['weights']} ratio={c6['ratio_fraction']:.3f} "
                     f"decay={c6['decay_fraction']:.3f} large_drops={c6['large_drops']}")


def test_c7_dissipation_identity():
    ok, c7 = identity_audit(n=100)
    worst = ", ".join(f"{k}={v:.1e}" for k, v in c7["worst_residual"].items())
    report("C7", ok, f"worst residual {worst}")


def test_c8_negativity_scan(cfg):
    ok, c8, _ = negativity_audit(cfg)
    kc = min(s["K_cont"] for s in c8["scans"])
    kr = min(s["K_rh"] for s in c8["scans"])
    report("C8", ok, f"worst_margin={c8['worst_margin']:.2e} K_cont>={kc:.3f} K_rh>={kr:.3f}")


def test_c9_overtaking_shock():
    ok, c9 = interaction_scan(n=1000)
    report("C9", ok, f"min(B-max b)={c9['min_B_minus_max_b']:.4f} min_F={c9['min_F']:.6f} "
                     f"residual={c9['max_residual']:.1e}")


def test_c10_wave_separation():
    ok, c10 = separation_scan(n=1000)
    report("C10", ok, f"min_separation={c10['min_separation']:.4f} "
                      f"closed_form_difference={c10['max_closed_form_difference']:.1e}")


def test_c11_holder_stability(cfg):
    ok, c11 = holder_stability(cfg)
    slopes = ", ".join(f"{k}={v:.3f}" for k, v in c11["slopes"].items())
    report("C11", ok, f"K_fit={c11['K_fit']:.3f} slopes: {slopes}")


def test_c12_nu_convergence(cfg):
    ok, c12 = nu_convergence(cfg)
    factors = [f for r in c12["runs"] for f in r["factors"]]
    report("C12", ok, f"halving factors in [{min(factors):.2f}, {max(factors):.2f}]")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
