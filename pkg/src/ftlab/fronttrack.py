"""Event-driven front tracking with Glimm functional bookkeeping.

A profile is piecewise constant; every jump is replaced by the fan of its
nu-approximate Riemann solution.  Fronts move linearly until two adjacent ones
meet, the Riemann problem between the outer states is solved at the meeting
point, and the loop repeats.  The earliest crossing wins; equal times at
different places are taken leftmost first; meetings of three or more fronts
are split into pairwise ones by nudging the middle speeds (<= 1e-9, logged).
"""

import bisect
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .riemann import solve_riemann_w

__all__ = [
    "Front",
    "Profile",
    "GlimmReport",
    "Event",
    "FrontTrackingSolution",
    "BudgetExceeded",
    "init_fronts",
    "next_interaction",
    "resolve_interaction",
    "evolve",
    "glimm_functionals",
    "sample",
    "interaction_class",
]

PERTURB = 1e-9
MEET_TOL = 1e-11


class BudgetExceeded(RuntimeError):
    """Event loop hit the configured event budget."""


@dataclass(slots=True)
class Front:
    id: int
    x0: float
    t0: float
    speed: float
    family: int
    sigma: float
    left: tuple
    right: tuple

    @property
    def kind(self):
        return "shock" if self.sigma < 0 else "fan"

    def position(self, t):
        return self.x0 + self.speed * (t - self.t0)


class Profile:
    """Piecewise-constant profile: ``states[k]`` lives on (x[k-1], x[k]).

    States are Riemann-coordinate tuples; ``conserved`` gives the physical view.
    """

    def __init__(self, model, x, states):
        self.model = model
        self.x = np.asarray(x, dtype=float)
        self.states = [tuple(float(c) for c in s) for s in states]
        if len(self.states) != self.x.size + 1:
            raise ValueError("need one more state than breakpoints")
        if self.x.size > 1 and np.any(np.diff(self.x) < 0):
            raise ValueError("breakpoints must be nondecreasing")

    @classmethod
    def from_conserved(cls, model, x, states):
        w = model.to_riemann(np.asarray(states, dtype=float))
        return cls(model, x, [tuple(r) for r in np.atleast_2d(w)])

    @property
    def conserved(self):
        return self.model.from_riemann(np.array(self.states))

    @property
    def riemann(self):
        return np.array(self.states)

    def __call__(self, xq):
        idx = np.searchsorted(self.x, np.asarray(xq, dtype=float), side="right")
        return self.conserved[idx]

    def simplified(self, tol=0.0):
        """Drop breakpoints whose two sides agree (within tol)."""
        keep_x, keep_s = [], [self.states[0]]
        for xk, s in zip(self.x, self.states[1:]):
            if max(abs(a - b) for a, b in zip(s, keep_s[-1])) > tol:
                keep_x.append(xk)
                keep_s.append(s)
        return Profile(self.model, keep_x, keep_s)

    def total_variation(self):
        w = self.riemann
        return float(np.sum(np.abs(np.diff(w, axis=0))))


@dataclass
class GlimmReport:
    V: float
    Q: float
    U: float
    V2: float
    U_iso: float


@dataclass
class Event:
    t: float
    x: float
    in_ids: list
    out_ids: list
    dV: float
    dQ: float
    dU: float
    dV2: float = 0.0
    dU_iso: float = 0.0
    kind: str = "pairwise"
    klass: str = ""
    incoming: list = field(default_factory=list)   # (family, sigma)
    outgoing: tuple = ()                           # (sigma1, sigma2) of the fan
    perturbation: list = field(default_factory=list)

    def to_json(self):
        return json.dumps({"t": self.t, "x": self.x, "in_ids": self.in_ids, "out_ids": self.out_ids,
                           "dV": self.dV, "dQ": self.dQ, "dU": self.dU, "dV2": self.dV2,
                           "dU_iso": self.dU_iso, "kind": self.kind, "class": self.klass,
                           "perturbation": self.perturbation}, sort_keys=True)


def glimm_functionals(fronts, flavor="small-bv", kappa=1.0, kappa2=100.0, eta_weight=0.01):
    """V, Q, U = V + kappa Q and V2, U_iso = kappa2 V2 + Q for fronts ordered by position.

    A pair (left a, right b) is approaching when a is a 2-wave and b a 1-wave,
    or both belong to one family and at least one is a shock.  Both flavors
    are always returned; ``flavor`` only selects what ``U`` means to callers
    through :func:`FrontTrackingSolution.glimm`.
    """
    if len(fronts) == 0:
        return GlimmReport(0.0, 0.0, 0.0, 0.0, 0.0)
    fam = np.fromiter((f.family for f in fronts), dtype=np.int64, count=len(fronts))
    sig = np.fromiter((f.sigma for f in fronts), dtype=float, count=len(fronts))
    return _glimm_arrays(fam, sig, kappa, kappa2, eta_weight)


def _glimm_arrays(fam, sig, kappa, kappa2, eta_weight):
    mag = np.abs(sig)
    shock = sig < 0
    V = float(mag.sum())
    V2 = float(np.sum((1.0 - eta_weight * np.sign(sig)) * mag))
    contrib = np.zeros_like(mag)
    for f in (1, 2):
        mf = fam == f
        if not mf.any():
            continue
        c_all = np.cumsum(np.where(mf, mag, 0.0)) - np.where(mf, mag, 0.0)
        c_sh = np.cumsum(np.where(mf & shock, mag, 0.0)) - np.where(mf & shock, mag, 0.0)
        contrib += np.where(mf, np.where(shock, c_all, c_sh), 0.0)
        if f == 2:
            contrib += np.where(fam == 1, c_all, 0.0)
    Q = float(np.dot(mag, contrib))
    return GlimmReport(V, Q, V + kappa * Q, V2, kappa2 * V2 + Q)


def interaction_class(incoming):
    """Label a pairwise interaction from its (family, sigma) list."""
    if len(incoming) != 2:
        return "multi"
    (f1, s1), (f2, s2) = incoming
    if f1 != f2:
        return "head-on"
    k1 = "S" if s1 < 0 else "R"
    k2 = "S" if s2 < 0 else "R"
    return f"overtake-{f1}{k1}{k2}"


class FrontTrackingSolution:
    """Trajectory of a front tracking run: epochs of fronts plus the event log."""

    def __init__(self, model, nu, w_minus, w_plus, fronts, *, kappa=1.0, kappa2=100.0,
                 eta_weight=0.01, budget=200000, keep_history=True, next_id=0):
        self.model = model
        self.nu = nu
        self.w_minus = tuple(w_minus)
        self.w_plus = tuple(w_plus)
        self.fronts = list(fronts)
        self.t = 0.0
        self.kappa = kappa
        self.kappa2 = kappa2
        self.eta_weight = eta_weight
        self.budget = budget
        self.keep_history = keep_history
        self.events = []
        self.epoch_t = [0.0]
        self.epoch_fronts = [tuple(self.fronts)]
        self.perturbations = []
        self.next_id = next_id
        self.glimm0 = self.glimm()
        self.glimm_history = [(0.0, self.glimm0)]

    def glimm(self, fronts=None):
        return glimm_functionals(self.fronts if fronts is None else fronts, kappa=self.kappa,
                                 kappa2=self.kappa2, eta_weight=self.eta_weight)

    def new_id(self):
        self.next_id += 1
        return self.next_id - 1

    def fronts_at(self, t):
        if t < 0 or t > self.t + 1e-12:
            raise ValueError(f"time {t} outside the computed range [0, {self.t}]")
        if not self.keep_history:
            if t < self.epoch_t[-1]:
                raise ValueError("history was not kept for earlier times")
            return self.epoch_fronts[-1]
        k = bisect.bisect_right(self.epoch_t, t) - 1
        return self.epoch_fronts[k]

    def sample(self, t):
        fronts = self.fronts_at(t)
        x = [f.position(t) for f in fronts]
        # clamp rounding so breakpoints stay ordered
        for k in range(1, len(x)):
            if x[k] < x[k - 1]:
                x[k] = x[k - 1]
        states = [self.w_minus] + [f.right for f in fronts]
        return Profile(self.model, x, states)

    def event_log_jsonl(self):
        return "\n".join(e.to_json() for e in self.events) + ("\n" if self.events else "")

    @property
    def n_fronts_max(self):
        return max(len(f) for f in self.epoch_fronts)


def _fronts_from_fan(sol, fan, x, t):
    out = []
    for wv in fan.waves:
        out.append(Front(sol.new_id(), x, t, wv.speed, wv.family, wv.sigma, wv.left, wv.right))
    return out


def init_fronts(model, nu, data, **kwargs):
    """Replace every jump of ``data`` (a :class:`Profile`) by its Riemann fan."""
    prof = data.simplified()
    sol = FrontTrackingSolution(model, nu, prof.states[0], prof.states[-1], [], **kwargs)
    fronts = []
    for k, xk in enumerate(prof.x):
        try:
            fan = solve_riemann_w(model, nu, prof.states[k], prof.states[k + 1])
        except Exception as exc:
            raise type(exc)(f"jump {k} at x={xk}: {exc}") from exc
        fronts.extend(_fronts_from_fan(sol, fan, float(xk), 0.0))
    sol.fronts = fronts
    sol.epoch_fronts = [tuple(fronts)]
    sol.glimm0 = sol.glimm()
    sol.glimm_history = [(0.0, sol.glimm0)]
    return sol


def _next_pair(fronts, t):
    """(t*, index of left front of the earliest meeting pair) or None."""
    n = len(fronts)
    if n < 2:
        return None
    x0 = np.fromiter((f.x0 for f in fronts), float, n)
    t0 = np.fromiter((f.t0 for f in fronts), float, n)
    s = np.fromiter((f.speed for f in fronts), float, n)
    x = x0 + s * (t - t0)
    gap = np.maximum(np.diff(x), 0.0)
    closing = s[:-1] - s[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        dt = np.where(closing > 0, gap / closing, np.inf)
    k = int(np.argmin(dt))
    dmin = dt[k]
    if not np.isfinite(dmin):
        return None
    # leftmost among (numerically) simultaneous events
    ties = np.flatnonzero(dt <= dmin + 1e-13 * (1.0 + abs(t)))
    return t + float(dmin), int(ties[0])


def next_interaction(fronts, t=0.0):
    """Earliest crossing of adjacent fronts: (t*, x*, (left id, right id)) or None."""
    found = _next_pair(fronts, t)
    if found is None:
        return None
    ts, k = found
    a, b = fronts[k], fronts[k + 1]
    xs = 0.5 * (a.position(ts) + b.position(ts))
    return ts, xs, (a.id, b.id)


def resolve_interaction(model, nu, incoming, t=None, x=None, new_id=None):
    """Outgoing fronts for fronts meeting at one point: the fan of the outer states."""
    if len(incoming) < 2:
        raise ValueError("an interaction needs at least two fronts")
    if t is None:
        t = max(f.t0 for f in incoming)
    if x is None:
        x = sum(f.position(t) for f in incoming) / len(incoming)
    fan = solve_riemann_w(model, nu, incoming[0].left, incoming[-1].right)
    counter = iter(range(10 ** 12)) if new_id is None else None
    out = []
    for wv in fan.waves:
        fid = new_id() if new_id is not None else next(counter)
        out.append(Front(fid, x, t, wv.speed, wv.family, wv.sigma, wv.left, wv.right))
    return out, fan


def _group(fronts, k, ts):
    """Indices i..j of all fronts sitting at the meeting point of pair (k, k+1)."""
    xa = fronts[k].position(ts)
    xb = fronts[k + 1].position(ts)
    xs = 0.5 * (xa + xb)
    tol = MEET_TOL * (1.0 + abs(xs))
    i, j = k, k + 1
    while i > 0 and abs(fronts[i - 1].position(ts) - xs) <= tol:
        i -= 1
    while j < len(fronts) - 1 and abs(fronts[j + 1].position(ts) - xs) <= tol:
        j += 1
    return i, j, xs


def evolve(sol, T, on_event=None):
    """Advance ``sol`` to time T, logging every interaction and Glimm deltas."""
    if T < sol.t:
        raise ValueError("cannot evolve backwards")
    model, nu = sol.model, sol.nu
    fronts = sol.fronts
    g_now = sol.glimm(fronts)
    nudged_at = None
    pending = []
    while True:
        found = _next_pair(fronts, sol.t)
        if found is None or found[0] > T:
            break
        ts, k = found
        ts = max(ts, sol.t)
        i, j, xs = _group(fronts, k, ts)
        perturb = []
        if j - i >= 2 and nudged_at != (ts, i, j):
            # serialize: nudge the middle fronts, restart the search
            for m in range(i + 1, j):
                f = fronts[m]
                dv = PERTURB * (m - i) / (j - i)
                fronts[m] = replace(f, x0=f.position(sol.t), t0=sol.t, speed=f.speed + dv)
                perturb.append({"id": f.id, "dspeed": dv, "t": sol.t})
            sol.perturbations.extend(perturb)
            pending.extend(perturb)
            nudged_at = (ts, i, j)
            if sol.keep_history:
                sol.epoch_t.append(sol.t)
                sol.epoch_fronts.append(tuple(fronts))
            continue
        if len(sol.events) >= sol.budget:
            raise BudgetExceeded(f"event budget {sol.budget} exhausted at t={ts:.6g}")
        incoming = fronts[i:j + 1]
        out, fan = resolve_interaction(model, nu, incoming, ts, xs, sol.new_id)
        new_fronts = fronts[:i] + out + fronts[j + 1:]
        g_new = sol.glimm(new_fronts)
        inc = [(f.family, f.sigma) for f in incoming]
        ev = Event(ts, xs, [f.id for f in incoming], [f.id for f in out],
                   g_new.V - g_now.V, g_new.Q - g_now.Q, g_new.U - g_now.U,
                   g_new.V2 - g_now.V2, g_new.U_iso - g_now.U_iso,
                   kind="pairwise" if len(incoming) == 2 else "multi",
                   klass=interaction_class(inc), incoming=inc,
                   outgoing=fan.sigmas, perturbation=pending)
        nudged_at = None
        pending = []
        sol.events.append(ev)
        fronts = new_fronts
        g_now = g_new
        sol.t = ts
        sol.fronts = fronts
        sol.glimm_history.append((ts, g_now))
        if sol.keep_history:
            sol.epoch_t.append(ts)
            sol.epoch_fronts.append(tuple(fronts))
        else:
            sol.epoch_t = [ts]
            sol.epoch_fronts = [tuple(fronts)]
        if on_event is not None:
            on_event(sol, ev)
    sol.fronts = fronts
    if not sol.keep_history:
        sol.epoch_fronts = [tuple(fronts)]
    sol.t = T
    return sol


def sample(solution, t):
    return solution.sample(t)
