"""Experiment drivers, run configuration, run directories and the command line.

Every check carries a machine-readable criterion id (C1..C12) and a short
anchor name; reports list all twelve ids exactly once, marking the ones a
given command did not run as ``not-run``.
"""

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .dissipation import (
    make_frame,
    negativity_scan,
    overtaking_G,
    overtaking_root,
    quantified_identity_residual,
)
from .distance import WeightParams, l1_distance, l2_distance, sweeping_path
from .fronttrack import BudgetExceeded, Profile, evolve, init_fronts
from .models import DomainError, make_model
from .riemann import blend_defect, exact_edge_speeds, solve_riemann_w
from .shift import InvariantViolation, shift_cost, shifted_evolve
from .weight import WeightError, verify_weight, weight_iso, weight_smallbv

__all__ = [
    "CRITERIA",
    "ConfigError",
    "RunConfig",
    "ExperimentReport",
    "random_profile",
    "random_pair",
    "sharpness_burgers",
    "sharpness_check",
    "seeded_runs",
    "total_variation",
    "holder_stability",
    "glimm_audit",
    "weight_audit",
    "contraction_audit",
    "shifted_growth_audit",
    "contraction_and_growth",
    "identity_audit",
    "negativity_audit",
    "interaction_scan",
    "separation_scan",
    "nu_convergence",
    "infinite_bv_data",
    "oscillating_state",
    "fit_interaction_constant",
    "make_run_dir",
    "cli_entry",
]

CRITERIA = {
    "C1": "burgers-sharpness",
    "C2": "glimm-decay",
    "C3": "head-on-transparency",
    "C4": "weighted-contraction",
    "C5": "shifted-growth",
    "C6": "weight-contract",
    "C7": "dissipation-identity",
    "C8": "negativity-scan",
    "C9": "overtaking-shock",
    "C10": "wave-separation",
    "C11": "holder-stability",
    "C12": "nu-convergence",
}

# fitted once over isolated pairwise isothermal interactions with |sigma| <= 0.1
K0_FIT = 0.0063


class ConfigError(ValueError):
    """Malformed run configuration."""


@dataclass
class RunConfig:
    model: str = "isothermal"
    flavor: str = "isothermal"
    nu: float = 1e-3
    T: float = 1.0
    R: float = 1.0
    s: float = 12.0
    C1: float = 1.0
    kappa: float = 10 * K0_FIT
    kappa2: float = 100.0
    eta_weight: float = 0.01
    eps: float = 0.05
    a_star: float = 0.9
    C_star: float = 2.0
    L: float = 3.0
    H: tuple = (1.0, 1.0, 1.0)
    K: float = 10.0
    K_ball: float = 0.5
    rho_min: float = 1e-6
    seed: int = 0
    budget: int = 200000
    n_jumps: int = 4
    amplitude: float = 0.02
    n_runs: int = 20
    n_out: int = 5
    slack: float = 1.0
    data: dict = None
    # command specific
    s0: float = 0.05
    C: float = 20.0
    eps_sharp: float = 0.01

    _POSITIVE = ("nu", "T", "R", "s", "C1", "kappa2", "eps", "C_star", "L", "K", "K_ball",
                 "rho_min", "budget", "n_out", "s0", "C", "eps_sharp")

    def validate(self):
        if self.model not in ("isothermal", "burgers", "temple-toy"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.flavor not in ("isothermal", "small-bv"):
            raise ConfigError(f"unknown flavor {self.flavor!r}")
        for name in self._POSITIVE:
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
                raise ConfigError(f"{name} must be a positive number, got {val!r}")
        if not 0 < self.a_star < 1:
            raise ConfigError(f"a_star must lie in (0, 1), got {self.a_star!r}")
        if len(self.H) != 3 or any(h < 0 for h in self.H):
            raise ConfigError("H must hold three nonnegative numbers")
        if self.kappa < 0 or self.eta_weight < 0 or self.amplitude < 0 or self.slack < 0:
            raise ConfigError("kappa, eta_weight, amplitude and slack must be nonnegative")
        if self.n_jumps < 0 or self.n_runs < 1:
            raise ConfigError("n_jumps must be >= 0 and n_runs >= 1")
        if self.data is not None:
            if not isinstance(self.data, dict) or set(self.data) != {"x", "states"}:
                raise ConfigError("data must be an object with keys 'x' and 'states'")
            if len(self.data["states"]) != len(self.data["x"]) + 1:
                raise ConfigError("data needs one more state than breakpoints")
        return self

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kw = dict(raw)
        if "H" in kw:
            try:
                kw["H"] = tuple(float(h) for h in kw["H"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"H: {exc}") from exc
        return cls(**kw).validate()

    @classmethod
    def load(cls, path=None, overrides=None):
        raw = {}
        if path is not None:
            try:
                raw = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
        raw.update(overrides or {})
        return cls.from_dict(raw)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["H"] = list(self.H)
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:10]

    @property
    def weight_params(self):
        return WeightParams(K=self.K, H1=self.H[0], H2=self.H[1], H3=self.H[2])

    def make_model(self):
        return make_model(self.model, rho_min=self.rho_min)


@dataclass
class ExperimentReport:
    config: dict
    criteria: dict = field(default_factory=lambda: {cid: {"anchor": name, "status": "not-run"}
                                                    for cid, name in CRITERIA.items()})
    measured: dict = field(default_factory=dict)
    fitted: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    def record(self, cid, passed, **measured):
        self.criteria[cid] = {"anchor": CRITERIA[cid], "status": "pass" if passed else "fail", **measured}

    def failures(self):
        return [cid for cid, c in self.criteria.items() if c["status"] == "fail"]

    def to_json(self):
        return json.dumps({"config": self.config, "criteria": self.criteria, "measured": self.measured,
                           "fitted": self.fitted, "artifacts": self.artifacts},
                          indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


# -- data generators ----------------------------------------------------------------

def _base_state(model):
    return (0.0,) * model.n_families


def random_profile(model, rng, n_jumps=4, amplitude=0.02, span=(-0.5, 0.5), base=None):
    """Piecewise-constant data with ``n_jumps`` jumps of Riemann-coordinate size <= amplitude."""
    w = [tuple(base) if base is not None else _base_state(model)]
    for _ in range(n_jumps):
        w.append(tuple(np.asarray(w[-1]) + rng.uniform(-amplitude, amplitude, model.n_families)))
    x = np.sort(rng.uniform(*span, n_jumps))
    return Profile(model, x, w)


def random_pair(model, rng, n_jumps=4, amplitude=0.02):
    """Two profiles with the same far-field states."""
    u = random_profile(model, rng, n_jumps, amplitude)
    states = [u.states[0]] + [tuple(np.asarray(s) + rng.uniform(-amplitude / 2, amplitude / 2, len(s)))
                              for s in u.states[1:-1]] + [u.states[-1]]
    x = np.sort(u.x + rng.uniform(-0.05, 0.05, u.x.size))
    return u, Profile(model, x, states)


GAMMAS = {"log": np.log1p, "identity": lambda y: y}


def oscillating_state(x, b1, b2, gamma="log"):
    """W(x) = b1 + (b2 - b1)/2 (sin(Gamma(1/|x|)) + 1); scalar or vector b1, b2."""
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    phase = 0.5 * (np.sin(GAMMAS[gamma](1.0 / np.abs(np.asarray(x, dtype=float)))) + 1.0)
    if b1.ndim:
        phase = phase[..., None]
    return b1 + (b2 - b1) * phase


def infinite_bv_data(b1, b2, gamma="log", R=1.0, finest=2.0 ** -12, per_octave=16):
    """Piecewise-constant sampling of W on a grid refined geometrically toward 0.

    Breakpoints are +-R 2^(-j/per_octave) down to +-finest; the cell (-finest, finest)
    takes W(finest) and both far fields take W(R).  Returns (breakpoints, cell values).
    """
    n = max(1, int(round(per_octave * math.log2(R / finest))))
    r = R * 2.0 ** (-np.arange(n + 1) / per_octave)
    x = np.concatenate([-r, r[::-1]])
    mids = 0.5 * (x[:-1] + x[1:])
    mids[n] = r[-1]
    edge = oscillating_state(np.array([R]), b1, b2, gamma)
    vals = np.concatenate([edge, oscillating_state(mids, b1, b2, gamma), edge])
    return x, vals


def total_variation(values):
    v = np.asarray(values, dtype=float)
    d = np.diff(v, axis=0)
    return float(np.sum(np.abs(d)))


# -- C1: sharpness --------------------------------------------------------------------

def _burgers_run(model, x, w, T, nu=0.0):
    sol = init_fronts(model, nu, Profile(model, x, [(v,) for v in w]))
    evolve(sol, T)
    return sol


def sharpness_burgers(eps, T=1.0):
    """Stationary shock +1 | -1 against the data raised by eps on (0, 2)."""
    m = make_model("burgers")
    phi = _burgers_run(m, [0.0], [1.0, -1.0], T)
    phit = _burgers_run(m, [0.0, 2.0], [1.0, -1.0 + eps, -1.0], T)
    d0 = l2_distance(phi.sample(0.0), phit.sample(0.0))
    d1 = l2_distance(phi.sample(T), phit.sample(T))
    return {"eps": eps, "initial": d0, "final": d1, "initial_target": math.sqrt(2) * eps,
            "final_lower": math.sqrt(eps / 2), "final_exact": math.sqrt(2 * eps + eps ** 2)}


def sharpness_check(eps_list=(0.1, 0.01, 0.001), fit_list=(0.1, 0.01, 0.001, 0.0001)):
    rows = [sharpness_burgers(e) for e in eps_list]
    fit = [sharpness_burgers(e) for e in fit_list]
    slope = float(np.polyfit(np.log([r["initial"] for r in fit]), np.log([r["final"] for r in fit]), 1)[0])
    ok = all(abs(r["initial"] - r["initial_target"]) <= 1e-10 and r["final"] >= r["final_lower"] for r in rows)
    ok = ok and abs(slope - 0.5) <= 0.02
    return ok, {"rows": rows, "slope": slope}


# -- C2, C3, C6: Glimm functionals and weights ------------------------------------------

def seeded_runs(cfg, n_runs, n_jumps, amplitude, nu=None, seed0=0, span=(-0.5, 0.5)):
    model = cfg.make_model()
    nu = cfg.nu if nu is None else nu
    runs = []
    for k in range(n_runs):
        rng = np.random.default_rng(seed0 + k)
        data = random_profile(model, rng, n_jumps, amplitude, span)
        sol = init_fronts(model, nu, data, kappa=cfg.kappa, kappa2=cfg.kappa2,
                          eta_weight=cfg.eta_weight, budget=cfg.budget)
        evolve(sol, cfg.T)
        runs.append(sol)
    return runs


def glimm_audit(runs, tol=1e-12):
    """C2 and C3 over a list of isothermal runs."""
    n_ev = n_pair = n_head = 0
    worst_dU = worst_dUiso = worst_pair = worst_head = -math.inf
    for sol in runs:
        for ev in sol.events:
            n_ev += 1
            worst_dU = max(worst_dU, ev.dU)
            worst_dUiso = max(worst_dUiso, ev.dU_iso)
            if ev.kind == "pairwise":
                n_pair += 1
                prod = abs(ev.incoming[0][1] * ev.incoming[1][1])
                worst_pair = max(worst_pair, ev.dU_iso + prod)
                if ev.incoming[0][0] == 2 and ev.incoming[1][0] == 1:
                    n_head += 1
                    s2, s1 = ev.incoming[0][1], ev.incoming[1][1]
                    worst_head = max(worst_head, abs(ev.outgoing[0] - s1), abs(ev.outgoing[1] - s2))
    c2 = {"events": n_ev, "pairwise": n_pair, "max_dU": worst_dU, "max_dU_iso": worst_dUiso,
          "max_dU_iso_plus_product": worst_pair}
    c2_ok = n_ev > 0 and worst_dU <= tol and worst_dUiso <= tol and worst_pair <= tol
    c3 = {"head_on": n_head, "max_strength_change": worst_head if n_head else 0.0}
    c3_ok = n_head > 0 and worst_head <= 1e-10
    return (c2_ok, c2), (c3_ok, c3)


def weight_audit(small_runs, large_runs, cfg):
    """C6: small-BV and isothermal weights on small runs, isothermal weights on large runs."""
    reports = []
    for sol in small_runs:
        reports.append(verify_weight(weight_smallbv(sol, cfg.C1, cfg.kappa), sol))
        reports.append(verify_weight(weight_iso(sol, cfg.C1, cfg.eps, cfg.a_star), sol))
    for sol in large_runs:
        reports.append(verify_weight(weight_iso(sol, cfg.C1, cfg.eps, cfg.a_star), sol))
    ratio = min(r["ratio_fraction"] for r in reports)
    decay = min(r["decay_fraction"] for r in reports)
    sup = max(r["sup_a"] for r in reports)
    inv = max(r["sup_inv_a"] for r in reports)
    drops = sum(r["n_large_drops"] for r in reports)
    ok = ratio == 1.0 and decay == 1.0 and math.isfinite(sup) and math.isfinite(inv)
    return ok, {"weights": len(reports), "ratio_fraction": ratio, "decay_fraction": decay,
                "sup_a": sup, "sup_inv_a": inv, "large_drops": drops}


def fit_interaction_constant(model, nu=1e-3, n=400, amplitude=0.1, seed=0):
    """Smallest K0 with |sigma_1 - sum sigma'| + |sigma_2 - sum sigma''| <= K0 |sigma' sigma''|.

    Fitted over isolated approaching pairs; returns (K0, number of pairs).
    """
    rng = np.random.default_rng(seed)
    best, count = 0.0, 0
    nf = model.n_families
    while count < n:
        w0 = np.zeros(nf)
        fa, fb = rng.integers(1, nf + 1, 2)
        sa, sb = rng.uniform(-amplitude, amplitude, 2)
        if not (fa > fb or (fa == fb and min(sa, sb) < 0)):
            continue
        w1 = np.array(model.advance(fa, tuple(w0), sa, blend_defect(model, sa, nu)))
        w2 = np.array(model.advance(fb, tuple(w1), sb, blend_defect(model, sb, nu)))
        out = solve_riemann_w(model, nu, tuple(w0), tuple(w2), fan=False).sigmas
        incoming = np.zeros(nf)
        incoming[fa - 1] += sa
        incoming[fb - 1] += sb
        best = max(best, float(np.sum(np.abs(np.asarray(out) - incoming))) / abs(sa * sb))
        count += 1
    return best, count


# -- C4, C5: distances -----------------------------------------------------------------

def contraction_audit(cfg, n_pairs=50, flavors=("small-bv", "isothermal"), times=(0.25, 0.5, 1.0)):
    """C4: dnu_upper(S_t u, S_t ubar) <= dnu_upper(u, ubar) (1 + 10 nu)."""
    model = cfg.make_model()
    worst = {f: -math.inf for f in flavors}
    rows = []
    for k in range(n_pairs):
        rng = np.random.default_rng(cfg.seed + k)
        u, ub = random_pair(model, rng, cfg.n_jumps, cfg.amplitude)
        su = init_fronts(model, cfg.nu, u, budget=cfg.budget)
        sb = init_fronts(model, cfg.nu, ub, budget=cfg.budget)
        evolve(su, max(times))
        evolve(sb, max(times))
        for flavor in flavors:
            d0 = sweeping_path(su.sample(0.0), sb.sample(0.0), cfg.nu, flavor, cfg.weight_params).length()
            for t in times:
                dt = sweeping_path(su.sample(t), sb.sample(t), cfg.nu, flavor, cfg.weight_params).length()
                excess = dt / d0 - 1.0 if d0 > 0 else dt
                worst[flavor] = max(worst[flavor], excess)
                rows.append((k, flavor, t, d0, dt))
    ok = all(w <= 10 * cfg.nu for w in worst.values())
    out = {"pairs": n_pairs, "worst_relative_growth": worst, "tolerance": 10 * cfg.nu, "rows": rows}
    if worst.get("isothermal", -math.inf) > 10 * cfg.nu:
        # the H's are existence constants: flag, never retune silently
        out["suggestion"] = f"isothermal distance not monotone with H={list(cfg.H)}; try scaling H1..H3 up"
    return ok, out


def shifted_growth_audit(cfg, n_runs=20, flavors=("small-bv", "isothermal"), n_jumps=3, amplitude=0.04):
    """C5: dnu_upper(v(tau), psi(tau)) <= K2 shift_cost(psi, tau) + c sqrt(nu) at all output times.

    v is the front tracking run, psi its shifted twin steered by a run from perturbed data.
    K2 is the largest weight factor met on the sweeping paths of the run.
    """
    model = cfg.make_model()
    taus = np.linspace(0.0, cfg.T, cfg.n_out + 1)
    worst = -math.inf
    worst_ratio = 0.0
    K2_max = 0.0
    for k in range(n_runs):
        rng = np.random.default_rng(cfg.seed + 1000 + k)
        data, wild_data = random_pair(model, rng, n_jumps, amplitude)
        v = init_fronts(model, cfg.nu, data, budget=cfg.budget)
        evolve(v, cfg.T)
        wild = init_fronts(model, cfg.nu, wild_data, budget=cfg.budget)
        evolve(wild, cfg.T)
        psi = shifted_evolve(model, cfg.nu, data, wild, cfg.T, C1=cfg.C1, eps=cfg.eps, a_star=cfg.a_star,
                             C_star=cfg.C_star, L=cfg.L, K_ball=cfg.K_ball, budget=cfg.budget)
        for flavor in flavors:
            paths = [sweeping_path(v.sample(t), psi.sample(t), cfg.nu, flavor, cfg.weight_params) for t in taus]
            K2 = max(p.max_factor() for p in paths)
            K2_max = max(K2_max, K2)
            for t, p in zip(taus, paths):
                cost = shift_cost(psi, t)
                bound = K2 * cost + cfg.slack * math.sqrt(cfg.nu)
                worst = max(worst, p.length() - bound)
                if cost > 0:
                    worst_ratio = max(worst_ratio, p.length() / (K2 * cost))
    return worst <= 0.0, {"runs": n_runs, "worst_excess": worst, "max_length_over_K2_cost": worst_ratio,
                          "K2_max": K2_max, "slack": cfg.slack}


def contraction_and_growth(cfg, n_pairs=50, n_shifted=20):
    return contraction_audit(cfg, n_pairs), shifted_growth_audit(cfg, n_shifted)


# -- C7, C8: dissipation ----------------------------------------------------------------

def _random_state(model, rng):
    if model.kind == "isothermal":
        rho = rng.uniform(0.5, 2.0)
        return np.array([rho, rho * rng.uniform(-1.0, 1.0)])
    if model.kind == "burgers":
        return np.array([rng.uniform(-1.0, 1.0)])
    return rng.uniform(-0.4, 0.4, 2)


def identity_audit(n=100, seed=0, models=("isothermal", "burgers", "temple-toy")):
    """C7: residual of the quantified relative entropy identity on random triples."""
    rng = np.random.default_rng(seed)
    worst = {}
    for kind in models:
        m = make_model(kind)
        w = 0.0
        for _ in range(n):
            u = _random_state(m, rng)
            v = _random_state(m, rng)
            fam = int(rng.integers(1, m.n_families + 1))
            s = rng.uniform(0.0, 1.0 if kind == "isothermal" else 0.4)
            w = max(w, quantified_identity_residual(m, v, u, fam, s))
        worst[kind] = w
    return all(v < 1e-8 for v in worst.values()), {"worst_residual": worst, "samples_per_model": n}


def negativity_audit(cfg, combos=((0.01, 20.0), (0.01, 40.0), (0.05, 20.0), (0.05, 40.0)), n_grid=50):
    """C8: strict negativity of D_cont and D_RH on Pi* and positive fitted constants."""
    model = cfg.make_model()
    u_L = np.array([1.0, 0.0]) if model.n_comp == 2 else np.array([1.0])
    out = []
    rows = []
    for s0, C in combos:
        frame = make_frame(model, u_L, s0, C)
        res = negativity_scan(frame, cfg.K_ball, n_grid=n_grid)
        rows.extend((s0, C) + tuple(r) for r in res["rows"])
        out.append({"s0": s0, "C": C, "n_states": res["n_states"], "t_bar": res["t_bar"],
                    "dcont_max": res["dcont_max"], "drh_max": res["drh_max"],
                    "K_cont": res["K_cont"], "K_rh": res["K_rh"], "all_negative": res["all_negative"],
                    "flux_convexity_min_eig": res["flux_convexity_min_eig"]})
    ok = all(r["all_negative"] and r["K_cont"] > 0 and r["K_rh"] > 0 for r in out)
    worst = max(max(r["dcont_max"], r["drh_max"]) for r in out)
    return ok, {"scans": out, "worst_margin": worst}, rows


# -- C9, C10: interaction and separation scans -------------------------------------------

def interaction_scan(n=1000, seed=0):
    """C9: overtaking shock roots B, F for random (b, bb) in (1, 10]^2."""
    rng = np.random.default_rng(seed)
    bad = []
    worst_res = 0.0
    min_gap = math.inf
    min_F = math.inf
    for k in range(n):
        b, bb = 1.0 + 9.0 * (1.0 - rng.random(2))
        try:
            B, F = overtaking_root(b, bb)
        except RuntimeError as exc:
            bad.append({"sample": k, "error": str(exc)})
            continue
        worst_res = max(worst_res, abs(float(overtaking_G(B, b, bb))))
        min_gap = min(min_gap, B - max(b, bb))
        min_F = min(min_F, F)
    ok = not bad and min_gap > 0 and min_F > 1 and worst_res < 1e-10
    return ok, {"samples": n, "bracket_failures": bad, "min_B_minus_max_b": min_gap, "min_F": min_F,
                "max_residual": worst_res}


def _lax_middle_density(rl, vl, rr, vr):
    """Middle density of the isothermal Riemann problem from the conserved-variable Lax curves."""
    def fwd(r, r0):    # velocity change across a 1-wave from r0 to r
        return -(r - r0) / math.sqrt(r * r0) if r > r0 else -math.log(r / r0)

    def bwd(r, r0):    # velocity change across a 2-wave from r to r0 (read from the right)
        return (r - r0) / math.sqrt(r * r0) if r > r0 else math.log(r / r0)

    g = lambda r: (vl + fwd(r, rl)) - (vr + bwd(r, rr))
    lo, hi = 1e-12, 10.0 * max(rl, rr)
    while g(hi) > 0:
        hi *= 10.0
    return optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def separation_scan(n=1000, seed=0):
    """C10: max 1-speed < min 2-speed, and agreement with the textbook closed form."""
    m = make_model("isothermal")
    rng = np.random.default_rng(seed)
    worst_diff = 0.0
    min_gap = math.inf
    for _ in range(n):
        rl, rr = rng.uniform(0.2, 5.0, 2)
        vl, vr = rng.uniform(-2.0, 2.0, 2)
        s1, s2, wm, e1, e2 = exact_edge_speeds(m, [rl, rl * vl], [rr, rr * vr])
        rm = _lax_middle_density(rl, vl, rr, vr)
        vm = vl - ((rm - rl) / math.sqrt(rm * rl) if rm > rl else math.log(rm / rl))
        c1 = vl - math.sqrt(rm / rl) if rm > rl else vm - 1.0
        c2 = vr + math.sqrt(rm / rr) if rm > rr else vm + 1.0
        worst_diff = max(worst_diff, abs(e1 - c1), abs(e2 - c2))
        min_gap = min(min_gap, e2 - e1)
    ok = min_gap > 0 and worst_diff <= 1e-10
    return ok, {"samples": n, "min_separation": min_gap, "max_closed_form_difference": worst_diff}


# -- C11, C12: stability and convergence --------------------------------------------------

def _stability_family(name, delta, nu):
    """(model, v-data, u-data) for one of the three v-data families."""
    if name == "burgers-shift":
        m = make_model("burgers")
        return m, Profile(m, [0.0], [(1.0,), (-1.0,)]), Profile(m, [delta], [(1.0,), (-1.0,)])
    if name == "burgers-amplitude":
        m = make_model("burgers")
        v = Profile(m, [0.0, 2.0], [(1.0,), (-1.0,), (-1.0,)]).simplified()
        return m, v, Profile(m, [0.0, 2.0], [(1.0,), (-1.0 + delta,), (-1.0,)])
    if name == "isothermal-3wave":
        m = make_model("isothermal")
        U = np.array([[2.0, 0.0], [1.0, 0.3], [0.5, 0.1], [1.5, -0.2]])
        Up = U.copy()
        Up[1:-1, 0] += delta
        x = [-0.4, 0.0, 0.4]
        return m, Profile.from_conserved(m, x, U), Profile.from_conserved(m, x, Up)
    raise ValueError(f"unknown family {name!r}")


STABILITY_FAMILIES = ("burgers-shift", "burgers-amplitude", "isothermal-3wave")


def holder_stability(cfg, deltas=(1e-1, 1e-2, 1e-3, 1e-4), families=STABILITY_FAMILIES):
    """C11: ||u - v||_{L2(-R,R)}(tau) <= K sqrt(||u - v||_{L2(-R-s tau, R+s tau)}(0)), one K for all."""
    taus = np.linspace(0.0, cfg.T, cfg.n_out + 1)[1:]
    R, s = cfg.R, cfg.s
    rows = []
    slopes = {}
    bv = {}
    for fam in families:
        d0s, dTs = [], []
        for delta in deltas:
            m, vd, ud = _stability_family(fam, delta, cfg.nu)
            nu = 0.0 if m.kind == "burgers" else cfg.nu
            v = init_fronts(m, nu, vd, budget=cfg.budget)
            u = init_fronts(m, nu, ud, budget=cfg.budget)
            evolve(v, cfg.T)
            evolve(u, cfg.T)
            _check_information_speed([v, u], s)
            bv[fam] = max(bv.get(fam, 0.0), vd.total_variation(), ud.total_variation())
            for tau in taus:
                lhs = l2_distance(u.sample(tau), v.sample(tau), (-R, R))
                init = l2_distance(ud, vd, (-R - s * tau, R + s * tau))
                rows.append({"family": fam, "delta": delta, "tau": float(tau), "lhs": lhs, "initial": init})
            d0s.append(l2_distance(ud, vd, (-R, R)))
            dTs.append(rows[-1]["lhs"])
        slopes[fam] = float(np.polyfit(np.log(d0s), np.log(dTs), 1)[0])
    ratios = [r["lhs"] / math.sqrt(r["initial"]) for r in rows if r["initial"] > 0]
    K_fit = max(ratios)
    per_family_K = {f: max(r["lhs"] / math.sqrt(r["initial"]) for r in rows if r["family"] == f)
                    for f in families}
    holds = all(r["lhs"] <= K_fit * math.sqrt(r["initial"]) * (1 + 1e-12) for r in rows)
    ok = holds and K_fit > 0 and all(v >= 0.45 for v in slopes.values())
    # fitted K against the BV bound M; no growth law is asserted
    K_vs_M = sorted((bv[f], per_family_K[f], f) for f in families)
    return ok, {"K_fit": K_fit, "K_per_family": per_family_K, "slopes": slopes,
                "K_vs_M": [{"family": f, "M": M, "K": K} for M, K, f in K_vs_M], "rows": rows}


def _check_information_speed(sols, s):
    vmax = max((abs(f.speed) for sol in sols for fr in sol.epoch_fronts for f in fr), default=0.0)
    if vmax >= s:
        raise InvariantViolation(f"RunConfig.s: front speed {vmax:.4g} reaches the information speed {s}")


def nu_convergence(cfg, nus=(4e-3, 2e-3, 1e-3), n_jumps=3, amplitude=0.1, n_data=3):
    """C12: L1 distance between the nu and nu/2 runs shrinks by >= 1.5 per halving."""
    model = cfg.make_model()
    per_data = []
    ok = True
    for k in range(n_data):
        rng = np.random.default_rng(cfg.seed + 500 + k)
        data = random_profile(model, rng, n_jumps, amplitude)
        levels = sorted(set(nus) | {n / 2 for n in nus}, reverse=True)
        sols = {}
        for nu in levels:
            sol = init_fronts(model, nu, data, budget=cfg.budget)
            evolve(sol, cfg.T)
            sols[nu] = sol.sample(cfg.T)
        dists = [l1_distance(sols[nu], sols[nu / 2], (-cfg.R - 2, cfg.R + 2)) for nu in nus]
        factors = [a / b for a, b in zip(dists[:-1], dists[1:])]
        ok = ok and all(f >= 1.5 for f in factors)
        per_data.append({"distances": dists, "factors": factors})
    return ok, {"nus": list(nus), "runs": per_data}


# -- run directories and commands ------------------------------------------------------

def make_run_dir(cfg, root="runs"):
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    base = Path(root) / f"{stamp}-{cfg.digest()}"
    path = base
    k = 1
    while path.exists():
        path = Path(f"{base}-{k}")
        k += 1
    path.mkdir(parents=True)
    (path / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


def profiles_csv(sol, times):
    buf = io.StringIO()
    buf.write("# ftlab profiles v1\n")
    w = csv.writer(buf, lineterminator="\n")
    nc = sol.model.n_comp
    w.writerow(["t", "x_left", "x_right"] + [f"u{k}" for k in range(nc)])
    for t in times:
        prof = sol.sample(float(t))
        edges = np.concatenate([[-math.inf], prof.x, [math.inf]])
        for k, u in enumerate(np.atleast_2d(prof.conserved)):
            w.writerow([repr(float(t)), repr(float(edges[k])), repr(float(edges[k + 1]))]
                       + [repr(float(c)) for c in u])
    return buf.getvalue()


def rows_csv(header, rows, tag):
    buf = io.StringIO()
    buf.write(f"# ftlab {tag} v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _initial_data(cfg, model):
    if cfg.data is not None:
        try:
            return Profile.from_conserved(model, cfg.data["x"], np.asarray(cfg.data["states"], dtype=float))
        except (ValueError, DomainError) as exc:
            raise ConfigError(f"data: {exc}") from exc
    return random_profile(model, np.random.default_rng(cfg.seed), cfg.n_jumps, cfg.amplitude)


def cmd_simulate(cfg, run_dir, report):
    model = cfg.make_model()
    sol = init_fronts(model, cfg.nu, _initial_data(cfg, model), kappa=cfg.kappa, kappa2=cfg.kappa2,
                      eta_weight=cfg.eta_weight, budget=cfg.budget)
    evolve(sol, cfg.T)
    _check_information_speed([sol], cfg.s)
    (run_dir / "events.jsonl").write_text(sol.event_log_jsonl())
    (run_dir / "profiles.csv").write_text(profiles_csv(sol, np.linspace(0, cfg.T, cfg.n_out + 1)))
    report.measured["events"] = len(sol.events)
    report.measured["max_fronts"] = sol.n_fronts_max
    if model.kind == "isothermal":
        (c2_ok, c2), (c3_ok, c3) = glimm_audit([sol])
        report.record("C2", c2_ok, **c2)
        if c3["head_on"]:
            report.record("C3", c3_ok, **c3)
    weights = [weight_smallbv(sol, cfg.C1, cfg.kappa)]
    if model.kind == "isothermal":
        weights.append(weight_iso(sol, cfg.C1, cfg.eps, cfg.a_star))
    reps = [verify_weight(wf, sol) for wf in weights]
    report.record("C6", all(r["ratio_fraction"] == 1 and r["decay_fraction"] == 1 for r in reps),
                  weights=[{k: v for k, v in r.items() if k != "decay_failures"} for r in reps])
    report.artifacts += ["events.jsonl", "profiles.csv"]


def cmd_distance(cfg, run_dir, report):
    ok4, c4 = contraction_audit(cfg, cfg.n_runs)
    rows = c4.pop("rows")
    report.record("C4", ok4, **c4)
    ok5, c5 = shifted_growth_audit(cfg, cfg.n_runs)
    report.record("C5", ok5, **c5)
    report.fitted["K2"] = c5["K2_max"]
    (run_dir / "profiles.csv").write_text(rows_csv(["pair", "flavor", "t", "dnu_upper_0", "dnu_upper_t"],
                                                   rows, "contraction"))
    report.artifacts.append("profiles.csv")


def cmd_diss_scan(cfg, run_dir, report):
    ok7, c7 = identity_audit(seed=cfg.seed)
    report.record("C7", ok7, **c7)
    ok8, c8, rows = negativity_audit(cfg, combos=((cfg.s0, cfg.C),))
    report.record("C8", ok8, **c8)
    report.fitted["K_cont"] = c8["scans"][0]["K_cont"]
    report.fitted["K_rh"] = c8["scans"][0]["K_rh"]
    (run_dir / "profiles.csv").write_text(rows_csv(["s0", "C", "u1", "u2", "s", "D_value", "bound_rhs", "margin"],
                                                   rows, "dissipation scan"))
    report.artifacts.append("profiles.csv")


def cmd_stability(cfg, run_dir, report):
    ok11, c11 = holder_stability(cfg)
    rows = c11.pop("rows")
    report.record("C11", ok11, **c11)
    report.fitted["K"] = c11["K_fit"]
    ok12, c12 = nu_convergence(cfg)
    report.record("C12", ok12, **c12)
    (run_dir / "profiles.csv").write_text(rows_csv(["family", "delta", "tau", "lhs", "initial"],
                                                   [tuple(r.values()) for r in rows], "stability"))
    report.artifacts.append("profiles.csv")


def cmd_sharpness(cfg, run_dir, report):
    r = sharpness_burgers(cfg.eps_sharp)
    ok1, c1 = sharpness_check()
    report.measured["requested"] = r
    report.record("C1", ok1, **c1)
    (run_dir / "profiles.csv").write_text(rows_csv(["eps", "initial", "final", "final_lower"],
                                                   [(x["eps"], x["initial"], x["final"], x["final_lower"])
                                                    for x in [r] + c1["rows"]], "sharpness"))
    report.artifacts.append("profiles.csv")


def cmd_interactions(cfg, run_dir, report):
    ok9, c9 = interaction_scan(seed=cfg.seed)
    report.record("C9", ok9, **c9)
    ok10, c10 = separation_scan(seed=cfg.seed)
    report.record("C10", ok10, **c10)
    K0, npairs = fit_interaction_constant(cfg.make_model(), cfg.nu, seed=cfg.seed)
    report.fitted["K0"] = K0
    report.measured["K0_pairs"] = npairs


COMMANDS = {
    "simulate": cmd_simulate,
    "distance": cmd_distance,
    "diss-scan": cmd_diss_scan,
    "stability": cmd_stability,
    "sharpness": cmd_sharpness,
    "interactions": cmd_interactions,
}


def _parse_set(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="ftlab", description="Front tracking stability experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        sp.add_argument("--runs-root", default="runs", help="directory holding run directories")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--nu", type=float)
        sp.add_argument("--T", type=float)
        sp.add_argument("--model")
        sp.add_argument("--flavor")
        if name == "sharpness":
            sp.add_argument("--eps", type=float, dest="eps_sharp")
        if name == "diss-scan":
            sp.add_argument("--C", type=float)
            sp.add_argument("--s0", type=float)
    return p


def cli_entry(argv=None):
    """Run one subcommand; 0 on success, 2 for malformed config, 3 for a violated criterion."""
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "config", "set", "runs_root") and v is not None}
    try:
        cfg = RunConfig.load(args.config, {**_parse_set(args.set), **flags})
    except (ConfigError, TypeError) as exc:
        print(f"ftlab: malformed config: {exc}", file=sys.stderr)
        return 2
    run_dir = make_run_dir(cfg, args.runs_root)
    report = ExperimentReport(cfg.to_dict())
    status = 0
    try:
        COMMANDS[args.command](cfg, run_dir, report)
    except ConfigError as exc:
        print(f"ftlab: malformed config: {exc}", file=sys.stderr)
        status = 2
    except (InvariantViolation, WeightError) as exc:
        print(f"ftlab: invariant violation: {exc}", file=sys.stderr)
        report.measured["invariant_violation"] = str(exc)
        status = 3
    except (BudgetExceeded, DomainError) as exc:
        print(f"ftlab: run failed: {exc}", file=sys.stderr)
        report.measured["error"] = str(exc)
        status = 1
    # keep the run directory layout uniform across commands
    if not (run_dir / "events.jsonl").exists():
        (run_dir / "events.jsonl").write_text("")
    if not (run_dir / "profiles.csv").exists():
        (run_dir / "profiles.csv").write_text("# ftlab profiles v1\n")
    report.artifacts.append("report.json")
    (run_dir / "report.json").write_text(report.to_json() + "\n")
    if status == 0 and report.failures():
        names = ", ".join(f"{cid} ({CRITERIA[cid]})" for cid in report.failures())
        print(f"ftlab: invariant violation: criterion {names} failed", file=sys.stderr)
        status = 3
    print(run_dir)
    return status
