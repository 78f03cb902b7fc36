"""Space-time weights a(x, t) attached to the shocks of a front tracking run.

Two constructions:

* small-BV closed form
      a = exp(c (V + 3 kappa/2 Q - sum_{1-shocks left of x} |sigma| + sum_{2-shocks left of x} |sigma|)),
  with c = 3 C1 / 4;
* isothermal construction, built left to right from a(-inf) = exp(c U) D, where
  U = kappa2 V2 + Q and D collects the drops applied at special interactions.
  Across a shock of strength above eps the ratio a(x+)/a(x-) is a* (1-shock)
  or 1/a* (2-shock); below eps it is exp(-c|sigma|) or exp(c|sigma|).
"""

import bisect
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .fronttrack import glimm_functionals

__all__ = [
    "WeightError",
    "WeightEpoch",
    "WeightField",
    "drop_factor",
    "weight_smallbv",
    "weight_iso",
    "verify_weight",
]

DECAY_RTOL = 1e-12
MIN_CELL = 1e-9


class WeightError(RuntimeError):
    """The weight failed to decay at an interaction."""


@dataclass
class WeightEpoch:
    t: float
    shocks: tuple          # shock fronts, left to right
    values: np.ndarray     # len(shocks) + 1 values; values[0] is a(-inf)
    event_index: int = -1  # index into the run's event list, -1 for the initial epoch

    def positions(self, t):
        return np.array([f.position(t) for f in self.shocks])

    def ratios(self):
        return self.values[1:] / self.values[:-1]


@dataclass
class WeightField:
    flavor: str
    C1: float
    epochs: list = field(default_factory=list)
    drops: list = field(default_factory=list)   # (event index, factor, reason)
    params: dict = field(default_factory=dict)

    def epoch_at(self, t):
        k = bisect.bisect_right([e.t for e in self.epochs], t) - 1
        return self.epochs[max(k, 0)]

    def __call__(self, x, t):
        ep = self.epoch_at(t)
        idx = np.searchsorted(ep.positions(t), np.asarray(x, dtype=float), side="right")
        return ep.values[idx]

    def profile(self, t):
        """(breakpoints, values) at time t, usable by ``weighted_rel_entropy``."""
        ep = self.epoch_at(t)
        return ep.positions(t), ep.values

    @property
    def sup(self):
        return max(float(e.values.max()) for e in self.epochs)

    @property
    def inv_sup(self):
        return max(float((1.0 / e.values).max()) for e in self.epochs)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# ftlab weight field v1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch_start_t", "breakpoint_x", "value"])
        for ep in self.epochs:
            w.writerow([repr(ep.t), "-inf", repr(float(ep.values[0]))])
            for f, x, v in zip(ep.shocks, ep.positions(ep.t), ep.values[1:]):
                w.writerow([repr(ep.t), repr(float(x)), repr(float(v))])
        return buf.getvalue()


def _epoch_events(sol):
    """Pair every stored epoch with the index of the event that opened it (or -1)."""
    out = [-1]
    ptr = 0
    prev = {f.id for f in sol.epoch_fronts[0]}
    for fronts in sol.epoch_fronts[1:]:
        ids = {f.id for f in fronts}
        if ids != prev:
            out.append(ptr)
            ptr += 1
        else:
            out.append(-1)  # speed nudge only
        prev = ids
    return out


def _shock_exponents(fronts, c):
    """Cumulative per-shock exponent to the right of each shock (small-BV form)."""
    shocks = [f for f in fronts if f.sigma < 0]
    steps = np.array([(-1.0 if f.family == 1 else 1.0) * c * abs(f.sigma) for f in shocks])
    return shocks, np.concatenate([[0.0], np.cumsum(steps)])


def weight_smallbv(sol, C1=1.0, kappa=None):
    """Closed-form small-BV weight for every epoch of ``sol``."""
    kappa = sol.kappa if kappa is None else kappa
    c = 0.75 * C1
    field_ = WeightField("small-bv", C1, params={"kappa": kappa})
    for t, fronts, ev in zip(sol.epoch_t, sol.epoch_fronts, _epoch_events(sol)):
        g = glimm_functionals(fronts, kappa=kappa)
        shocks, expo = _shock_exponents(fronts, c)
        vals = np.exp(c * (g.V + 1.5 * kappa * g.Q) + expo)
        field_.epochs.append(WeightEpoch(t, tuple(shocks), vals, ev))
    return field_


def _ratios_iso(shocks, c, eps, a_star):
    r = []
    for f in shocks:
        s = abs(f.sigma)
        if s > eps:
            r.append(a_star if f.family == 1 else 1.0 / a_star)
        else:
            r.append(math.exp(-c * s) if f.family == 1 else math.exp(c * s))
    return np.array(r)


def drop_factor(event, c, eps, a_star):
    """Multiplier (<= 1) applied to the whole field after ``event``, with the reason.

    Decision table over (class, large/small flags of incoming and outgoing shocks).
    """
    if len(event.incoming) != 2:
        return 1.0, "multi"
    (f1, s1), (f2, s2) = event.incoming
    if f1 != f2:
        return 1.0, "head-on"
    fam = f1
    out_major = event.outgoing[fam - 1] if len(event.outgoing) >= fam else event.outgoing[0]
    big = lambda s: s < 0 and abs(s) > eps
    small_shock = lambda s: s < 0 and abs(s) <= eps
    if s1 < 0 and s2 < 0:
        if fam == 2:
            if big(out_major) and not big(s1) and not big(s2):
                return a_star, "2S2S small+small->large"
            return 1.0, "2S2S"
        if big(out_major) and big(s1) and big(s2):
            return a_star, "1S1S large+large->large"
        if big(out_major) and (big(s1) != big(s2)):
            small = s2 if big(s1) else s1
            return math.exp(-c * abs(small)), "1S1S large+small->large"
        return 1.0, "1S1S"
    if s1 >= 0 and s2 >= 0:
        return 1.0, "RR"
    shock = s1 if s1 < 0 else s2
    if fam == 1 and big(shock) and (out_major >= 0 or small_shock(out_major)):
        return a_star, "1SR large->small"
    return 1.0, f"{fam}SR"


def weight_iso(sol, C1=1.0, eps=0.05, a_star=0.9):
    """Event-driven isothermal weight: per-shock ratios plus drops at special interactions."""
    c = 0.75 * C1
    field_ = WeightField("isothermal", C1, params={"eps": eps, "a_star": a_star, "kappa2": sol.kappa2})
    D = 1.0
    for t, fronts, ev in zip(sol.epoch_t, sol.epoch_fronts, _epoch_events(sol)):
        if ev >= 0:
            factor, reason = drop_factor(sol.events[ev], c, eps, a_star)
            if factor != 1.0:
                D *= factor
                field_.drops.append((ev, factor, reason))
        g = glimm_functionals(fronts, kappa2=sol.kappa2, eta_weight=sol.eta_weight)
        shocks = [f for f in fronts if f.sigma < 0]
        left = math.exp(c * g.U_iso) * D
        vals = left * np.concatenate([[1.0], np.cumprod(_ratios_iso(shocks, c, eps, a_star))])
        field_.epochs.append(WeightEpoch(t, tuple(shocks), vals, ev))
    return field_


def _decay_violation(prev, new, t):
    """Largest relative increase of a across the event, ignoring cells thinner than MIN_CELL."""
    xp = prev.positions(t)
    xn = new.positions(t)
    pts = np.union1d(xp, xn)
    if pts.size == 0:
        return float(new.values[0] / prev.values[0] - 1.0)
    cells = np.concatenate([[pts[0] - 1.0], pts, [pts[-1] + 1.0]])
    width = np.diff(cells)
    mid = 0.5 * (cells[:-1] + cells[1:])
    keep = width > MIN_CELL
    a_old = prev.values[np.searchsorted(xp, mid[keep], side="right")]
    a_new = new.values[np.searchsorted(xn, mid[keep], side="right")]
    return float(np.max(a_new / a_old - 1.0))


def verify_weight(wfield, sol, strict=False):
    """Ratio brackets, time decay and global bounds of a weight field.

    Returns a dict; with ``strict=True`` a decay violation raises WeightError
    naming the event and its interaction class.
    """
    C1 = wfield.C1
    eps = wfield.params.get("eps", math.inf)
    a_star = wfield.params.get("a_star", None)
    n_ratio = n_ratio_ok = 0
    worst_ratio = 0.0
    for ep in wfield.epochs:
        for f, r in zip(ep.shocks, ep.ratios()):
            s = abs(f.sigma)
            n_ratio += 1
            if s > eps:
                target = a_star if f.family == 1 else 1.0 / a_star
                ok = abs(r - target) <= 1e-12 * target
            elif f.family == 1:
                ok = 1.0 - 2.0 * C1 * s <= r * (1 + 1e-14) and r <= (1.0 - 0.5 * C1 * s) * (1 + 1e-14)
            else:
                ok = 1.0 + 0.5 * C1 * s <= r * (1 + 1e-14) and r <= (1.0 + 2.0 * C1 * s) * (1 + 1e-14)
            n_ratio_ok += ok
            if not ok:
                worst_ratio = max(worst_ratio, s)
    n_dec = n_dec_ok = 0
    worst_dec = -math.inf
    failures = []
    for prev, new in zip(wfield.epochs[:-1], wfield.epochs[1:]):
        if new.event_index < 0:
            continue
        ev = sol.events[new.event_index]
        v = _decay_violation(prev, new, ev.t)
        n_dec += 1
        worst_dec = max(worst_dec, v)
        if v <= DECAY_RTOL:
            n_dec_ok += 1
        else:
            failures.append({"event": new.event_index, "t": ev.t, "class": ev.klass, "increase": v})
            if strict:
                raise WeightError(f"weight grows by {v:.3e} at event {new.event_index} "
                                  f"(t={ev.t:.6g}, class {ev.klass})")
    rule1 = sum(1 for _, _, why in wfield.drops if "large" in why)
    return {
        "flavor": wfield.flavor,
        "n_ratio_checks": n_ratio,
        "ratio_ok": n_ratio_ok,
        "ratio_fraction": n_ratio_ok / n_ratio if n_ratio else 1.0,
        "largest_failing_strength": worst_ratio,
        "n_decay_checks": n_dec,
        "decay_ok": n_dec_ok,
        "decay_fraction": n_dec_ok / n_dec if n_dec else 1.0,
        "worst_relative_increase": worst_dec if n_dec else 0.0,
        "decay_failures": failures,
        "sup_a": wfield.sup,
        "sup_inv_a": wfield.inv_sup,
        "n_drops": len(wfield.drops),
        "n_large_drops": rule1,
    }
