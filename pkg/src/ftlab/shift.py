"""Shift functions for shocks and the shifted front tracking solution.

A shift h(t) solves the Filippov problem h' = V(u(h, t)) against a piecewise
constant "wild" solution u.  For a 1-shock

    V(u) = lambda_1(u)                 if u lies in the closure of Pi*,
           lambda_1(u) - (C* + 2L)     otherwise,
           -C* - L                     off the admissible set,

and 2-shocks use the mirror image under x -> -x.  At a wild discontinuity
(u-, u+, s) the curve crosses when V(u-) and V(u+) sit on the same side of s
and otherwise sticks to the discontinuity.  Because u is piecewise constant
in space-time cells, every segment of h is a straight line and the path is
integrated exactly, event by event.
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dissipation import build_pi_geometry, make_frame, shift_functional, tilde_eta
from .fronttrack import (BudgetExceeded, Event, FrontTrackingSolution, Profile, _group, _next_pair, init_fronts,
                         interaction_class, resolve_interaction)
from .models import DomainError

__all__ = [
    "InvariantViolation",
    "ShiftRule",
    "ShiftPath",
    "ShiftedSolution",
    "make_rule",
    "filippov_velocity",
    "build_shift",
    "shifted_evolve",
    "shift_cost",
    "psi_rh_profile",
    "path_dissipation",
    "weighted_shift_functional",
]

HIT_TOL = 1e-12


class InvariantViolation(RuntimeError):
    """A structural guarantee of the shifted solution was broken."""


@dataclass
class ShiftRule:
    """Filippov velocity field attached to one reference shock."""

    model: object
    family: int
    u_L: np.ndarray
    u_R: np.ndarray
    s0: float
    C: float
    C_star: float = 2.0
    L: float = 3.0
    large: bool = False
    a_star: float = 0.9
    geometry: object = None

    def _frame_state(self, u):
        # 2-shocks are handled in the mirror frame, where they are 1-shocks
        return u if self.family == 1 else self.model.reflect(u)

    def inside(self, u):
        """Membership of the region where the shift moves as a characteristic."""
        m = self.model
        if self.large:
            # Pi for a large shock: eta(u|u_L) <= a* eta(u|u_R), mirrored for 2-shocks
            if self.family == 1:
                return bool(m.rel_entropy(u, self.u_L) <= self.a_star * m.rel_entropy(u, self.u_R))
            return bool(m.rel_entropy(u, self.u_R) <= self.a_star * m.rel_entropy(u, self.u_L))
        g = self.geometry
        v = self._frame_state(np.asarray(u, dtype=float))
        if g is None:
            frame = self.frame
            return bool(tilde_eta(frame, v) <= 0)
        return bool(g.in_pi_star(v, closed=True))

    @property
    def frame(self):
        if self.geometry is not None:
            return self.geometry.frame
        uL = self.u_L if self.family == 1 else self.model.reflect(self.u_R)
        return make_frame(self.model, uL, self.s0, self.C)

    def classify(self, u):
        """(V(u), region label); ``u=None`` stands for a state off the admissible set."""
        m = self.model
        sign = -1.0 if self.family == 1 else 1.0
        if u is None:
            return sign * (self.C_star + self.L), "vacuum"
        try:
            u = m.check(np.asarray(u, dtype=float))
        except DomainError:
            return sign * (self.C_star + self.L), "vacuum"
        lam = float(m.eigenvalues(u)[..., self.family - 1])
        if self.inside(u):
            return lam, "inside-Pi*"
        return lam + sign * (self.C_star + 2.0 * self.L), "outside-penalty"

    def velocity(self, u):
        return self.classify(u)[0]


def make_rule(model, family, u_L, u_R, sigma, C1=1.0, eps=0.05, a_star=0.9, C_star=2.0, L=3.0,
              K_ball=0.5, n_rays=96):
    """Filippov rule for the shock (u_L, u_R) of signed strength sigma < 0.

    The weight slope C follows the small-shock ratio a_l/a_r = exp(3 C1 |sigma|/4) = 1 + C s0.
    """
    s0 = abs(float(sigma))
    u_L = np.asarray(u_L, dtype=float)
    u_R = np.asarray(u_R, dtype=float)
    if s0 > eps:
        return ShiftRule(model, family, u_L, u_R, s0, 0.0, C_star, L, True, a_star)
    C = math.expm1(0.75 * C1 * s0) / s0 if s0 > 0 else 0.75 * C1
    rule = ShiftRule(model, family, u_L, u_R, s0, C, C_star, L, False, a_star)
    if s0 < 1e-7:
        return rule  # Pi only; the ball is below resolution
    uL = u_L if family == 1 else model.reflect(u_R)
    try:
        frame = make_frame(model, uL, s0, C)
        rule.geometry = build_pi_geometry(frame, K_ball, n_rays=n_rays)
    except (ValueError, RuntimeError, DomainError):
        rule.geometry = None
    return rule


def filippov_velocity(rule, u):
    return rule.velocity(u)


# -- wild-solution traces -----------------------------------------------------------

class _Wild:
    """Epoch-indexed view of a piecewise-constant wild solution."""

    def __init__(self, sol):
        self.sol = sol
        self.model = sol.model
        self.t = np.asarray(sol.epoch_t, dtype=float)
        self.fronts = list(sol.epoch_fronts)
        self.w_minus = sol.w_minus
        self._k = 0

    def epoch(self, t):
        return max(0, int(self.t.searchsorted(t, side="right")) - 1)

    def end_of(self, k):
        # epochs can repeat a start time after speed nudges; skip empty ones
        for j in range(k + 1, len(self.t)):
            if self.t[j] > self.t[k]:
                return self.t[j]
        return math.inf

    def state_arrays(self, k):
        fr = self.fronts[k]
        states = [self.w_minus] + [f.right for f in fr]
        return fr, states


def _conserved(model, w):
    return model.from_riemann(np.asarray(w, dtype=float))


def _resolve_point(rule, model, t, h, fronts, states, lo, hi):
    """Filippov choice at h for the wild fronts lo..hi-1 sitting at h.

    ``states[lo]`` .. ``states[hi]`` are the states around them.  Returns
    (speed, attached front or None, label).
    """
    VL = [rule.classify(_conserved(model, states[j])) for j in range(lo, hi + 1)]
    V = [v for v, _ in VL]
    speeds = [fronts[j].speed for j in range(lo, hi)]
    n = hi - lo
    lab = lambda j: VL[j - lo][1]
    if n == 0:
        return V[0], None, lab(lo)
    if V[0] <= speeds[0]:
        return V[0], None, lab(lo)
    for j in range(1, n):
        if speeds[j - 1] <= V[j] <= speeds[j]:
            return V[j], None, lab(lo + j)
    if V[n] >= speeds[n - 1]:
        return V[n], None, lab(hi)
    for j in range(1, n + 1):
        if V[j - 1] >= speeds[j - 1] >= V[j]:
            f = fronts[lo + j - 1]
            return f.speed, f, "rh-exact" if f.sigma < 0 else "boundary-follow"
    # unreachable by the ordering argument; stick to the first front
    f = fronts[lo]
    return f.speed, f, "boundary-follow"


def _locate(fronts, t, h, tol):
    """Indices lo..hi of fronts at h (hi exclusive) and the cell index if none."""
    pos = np.array([f.position(t) for f in fronts]) if fronts else np.zeros(0)
    lo = int(np.searchsorted(pos, h - tol, side="left"))
    hi = int(np.searchsorted(pos, h + tol, side="right"))
    return pos, lo, hi


def _plan(rule, wild, k, t, h):
    """Velocity, attachment, label and the time the plan stays valid."""
    fronts, states = wild.state_arrays(k)
    tol = HIT_TOL * (1.0 + abs(h))
    pos, lo, hi = _locate(fronts, t, h, tol)
    speed, att, label = _resolve_point(rule, wild.model, t, h, fronts, states, lo, hi)
    t_end = wild.end_of(k)
    if att is not None:
        return speed, att, label, t_end
    # next hit with a neighbour moving relative to h
    best = t_end
    left = [j for j in range(len(fronts)) if pos[j] < h - tol or (lo <= j < hi and fronts[j].speed < speed)]
    right = [j for j in range(len(fronts)) if pos[j] > h + tol or (lo <= j < hi and fronts[j].speed > speed)]
    if left:
        j = left[-1]
        rel = speed - fronts[j].speed
        if rel < 0:
            best = min(best, t + (pos[j] - h) / rel)
    if right:
        j = right[0]
        rel = speed - fronts[j].speed
        if rel > 0:
            best = min(best, t + (pos[j] - h) / rel)
    return speed, None, label, max(best, t)


@dataclass
class ShiftPath:
    shock_id: int
    t: list = field(default_factory=list)
    x: list = field(default_factory=list)
    speed: list = field(default_factory=list)   # per segment
    label: list = field(default_factory=list)   # per segment
    true_speed: list = field(default_factory=list)
    sigma: float = 0.0

    def close(self, t, x):
        self.t.append(t)
        self.x.append(x)

    def __call__(self, tq):
        return np.interp(tq, self.t, self.x)

    def lipschitz(self):
        if len(self.t) < 2:
            return 0.0
        dt = np.diff(self.t)
        dx = np.diff(self.x)
        ok = dt > 0
        return float(np.max(np.abs(dx[ok] / dt[ok]))) if ok.any() else 0.0

    def to_rows(self):
        labs = self.label + [self.label[-1] if self.label else ""]
        return [(self.shock_id, t, x, lab) for t, x, lab in zip(self.t, self.x, labs)]


def build_shift(rule, wild_sol, t0, x0, T, shock_id=0, max_steps=1_000_000):
    """Integrate h' = V(u(h, t)) from (t0, x0) to T against ``wild_sol`` exactly."""
    wild = _Wild(wild_sol)
    path = ShiftPath(shock_id)
    t, h = float(t0), float(x0)
    path.t.append(t)
    path.x.append(h)
    att = None
    for _ in range(max_steps):
        if t >= T:
            break
        k = wild.epoch(t)
        speed, att, label, t_end = _plan(rule, wild, k, t, h)
        t_new = min(t_end, T)
        if att is not None:
            h_new = att.position(t_new)
        else:
            h_new = h + speed * (t_new - t)
        if t_new <= t:
            # degenerate hit at the current time: step past it
            t_new = min(T, t + 1e-14 * (1 + abs(t)))
            h_new = att.position(t_new) if att is not None else h + speed * (t_new - t)
        _append_segment(path, t_new, h_new, speed, label)
        t, h = t_new, h_new
    else:
        raise RuntimeError(f"shift integration did not finish by t={t}")
    return path


def _append_segment(path, t, x, speed, label, true_speed=None):
    if path.speed and path.speed[-1] == speed and path.label[-1] == label \
            and path.true_speed[-1] == true_speed and len(path.t) >= 2:
        path.t[-1] = t
        path.x[-1] = x
        return
    path.speed.append(speed)
    path.label.append(label)
    path.true_speed.append(true_speed)
    path.t.append(t)
    path.x.append(x)


# -- shifted front tracking ---------------------------------------------------------

@dataclass
class ShiftedSolution:
    """Front tracking run whose shocks move along shift paths."""

    run: FrontTrackingSolution
    paths: dict
    rules: dict
    true_speed: dict
    wild: object
    variant: str = "psi"

    def sample(self, t):
        return self.run.sample(t)

    def paths_csv(self):
        buf = io.StringIO()
        buf.write("# ftlab shift paths v1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shock_id", "t", "x", "region_label"])
        for sid in sorted(self.paths):
            for row in self.paths[sid].to_rows():
                w.writerow([row[0], repr(row[1]), repr(row[2]), row[3]])
        return buf.getvalue()


def _wild_traces_at(wild, k, t, h):
    fronts, states = wild.state_arrays(k)
    tol = HIT_TOL * (1.0 + abs(h))
    pos, lo, hi = _locate(fronts, t, h, tol)
    return states[lo], states[hi]


def shifted_evolve(model, nu, data, wild_sol, T, *, C1=1.0, eps=0.05, a_star=0.9, C_star=2.0,
                   L=3.0, K_ball=0.5, n_rays=96, budget=200000, kappa=1.0, kappa2=100.0,
                   eta_weight=0.01, shift_shocks=True):
    """Front tracking where shocks follow Filippov shifts against ``wild_sol``.

    Rarefaction pieces keep their speeds; fronts that meet interact through the
    nu-Riemann solver exactly as in the unshifted scheme.
    """
    sol = init_fronts(model, nu, data, kappa=kappa, kappa2=kappa2, eta_weight=eta_weight, budget=budget)
    wild = _Wild(wild_sol)
    rules, paths, true_speed, attach = {}, {}, {}, {}
    params = dict(C1=C1, eps=eps, a_star=a_star, C_star=C_star, L=L, K_ball=K_ball, n_rays=n_rays)

    def register(f):
        if f.sigma < 0 and shift_shocks:
            rules[f.id] = make_rule(model, f.family, _conserved(model, f.left), _conserved(model, f.right),
                                    f.sigma, **params)
            true_speed[f.id] = f.speed
            p = ShiftPath(f.id, sigma=f.sigma)
            p.t.append(f.t0)
            p.x.append(f.x0)
            paths[f.id] = p

    for f in sol.fronts:
        register(f)

    def replan(fronts, t, idx):
        """Set the speed of shock fronts[idx] from its rule at time t; return its valid-until time."""
        f = fronts[idx]
        k = wild.epoch(t)
        x = f.position(t)
        speed, att, label, t_end = _plan(rules[f.id], wild, k, t, x)
        if att is not None:
            fronts[idx] = replace(f, x0=att.position(t), t0=t, speed=att.speed)
        else:
            fronts[idx] = replace(f, x0=x, t0=t, speed=speed)
        attach[f.id] = (label, speed, t_end)
        return t_end

    def close_segment(f, t):
        label, speed, _ = attach[f.id]
        _append_segment(paths[f.id], t, f.position(t), f.speed, label, true_speed[f.id])

    fronts = sol.fronts
    g_now = sol.glimm(fronts)
    t = 0.0
    valid = {}
    for i, f in enumerate(fronts):
        if f.id in rules:
            valid[f.id] = replan(fronts, t, i)
    steps = 0
    while True:
        steps += 1
        if steps > 10 * budget:
            raise BudgetExceeded("shifted run did not finish")
        found = _next_pair(fronts, t)
        t_pair = found[0] if found is not None else math.inf
        t_shift = min(valid.values()) if valid else math.inf
        t_next = min(t_pair, t_shift, T)
        if t_next >= T and t_pair > T:
            for f in fronts:
                if f.id in rules:
                    close_segment(f, T)
            break
        t_next = max(t_next, t)
        if t_pair <= t_shift:
            ts, k = found
            ts = max(ts, t)
            i, j, xs = _group(fronts, k, ts)
            if len(sol.events) >= sol.budget:
                raise BudgetExceeded(f"event budget {sol.budget} exhausted at t={ts:.6g}")
            incoming = fronts[i:j + 1]
            for f in incoming:
                if f.id in rules:
                    close_segment(f, ts)
                    valid.pop(f.id, None)
            out, fan = resolve_interaction(model, nu, incoming, ts, xs, sol.new_id)
            g_old = g_now
            fronts = fronts[:i] + out + fronts[j + 1:]
            g_new = g_now = sol.glimm(fronts)
            inc = [(f.family, f.sigma) for f in incoming]
            ev = Event(ts, xs, [f.id for f in incoming], [f.id for f in out],
                       g_new.V - g_old.V, g_new.Q - g_old.Q, g_new.U - g_old.U,
                       g_new.V2 - g_old.V2, g_new.U_iso - g_old.U_iso,
                       kind="pairwise" if len(incoming) == 2 else "multi",
                       klass=interaction_class(inc), incoming=inc, outgoing=fan.sigmas)
            sol.events.append(ev)
            sol.glimm_history.append((ts, g_now))
            t = ts
            for n_off, f in enumerate(out):
                register(f)
                if f.id in rules:
                    valid[f.id] = replan(fronts, t, i + n_off)
        else:
            t = t_next
            for idx, f in enumerate(fronts):
                if f.id in rules and valid[f.id] <= t:
                    close_segment(f, t)
                    valid[f.id] = replan(fronts, t, idx)
        _check_order(fronts, t)
        sol.t = t
        sol.fronts = fronts
        sol.epoch_t.append(t)
        sol.epoch_fronts.append(tuple(fronts))
    sol.fronts = fronts
    sol.t = T
    return ShiftedSolution(sol, paths, rules, true_speed, wild_sol)


def _check_order(fronts, t):
    if len(fronts) < 2:
        return
    pos = np.fromiter((f.x0 + f.speed * (t - f.t0) for f in fronts), float, len(fronts))
    gap = np.diff(pos)
    if np.any(gap < -1e-9 * (1.0 + np.abs(pos[1:]))):
        k = int(np.argmin(gap))
        raise InvariantViolation(f"shifted fronts {fronts[k].id} and {fronts[k + 1].id} crossed at t={t:.6g}")


def shift_cost(psi, tau):
    """sum over shocks of int_0^tau |sigma| |h' - h'_true| dt, exact per segment."""
    total = 0.0
    for sid, p in psi.paths.items():
        sig = abs(p.sigma)
        for (ta, tb), v, vt in zip(zip(p.t[:-1], p.t[1:]), p.speed, p.true_speed):
            lo, hi = ta, min(tb, tau)
            if hi > lo:
                total += sig * abs(v - vt) * (hi - lo)
    return total


def shift_cost_squares(psi, tau):
    """(int sum |sigma|, int sum |sigma| (h' - h'_true)^2) for the Cauchy-Schwarz check."""
    a = b = 0.0
    for p in psi.paths.values():
        sig = abs(p.sigma)
        for (ta, tb), v, vt in zip(zip(p.t[:-1], p.t[1:]), p.speed, p.true_speed):
            lo, hi = ta, min(tb, tau)
            if hi > lo:
                a += sig * (hi - lo)
                b += sig * (v - vt) ** 2 * (hi - lo)
    return a, b


def psi_rh_profile(psi, t):
    """psi with the states around every shock replaced by exact Hugoniot states.

    The left state of each shock is kept and the right state moved onto the exact
    shock curve of the same strength; rarefaction pieces are untouched.
    """
    run = psi.run
    model = run.model
    fronts = run.fronts_at(t)
    x = [f.position(t) for f in fronts]
    states = [run.w_minus]
    cur = np.asarray(run.w_minus, dtype=float)
    for f in fronts:
        if f.sigma < 0:
            w_left = tuple(cur)
            w_new = model.advance(f.family, w_left, f.sigma, model.curve_defect(f.sigma))
            cur = np.asarray(w_new, dtype=float)
        else:
            cur = cur + (np.asarray(f.right) - np.asarray(f.left))
        states.append(tuple(cur))
    return Profile(model, np.maximum.accumulate(np.asarray(x)) if x else x, states)


def path_dissipation(rule, path, wild_sol, a2=1.0):
    """Boundary flux difference along each segment of a shift path.

    a2[q(u+;u_R) - h' eta(u+|u_R)] - a1[q(u-;u_L) - h' eta(u-|u_L)] with a1 = (1 + C s0) a2,
    evaluated at the segment midpoints.  Returns an array of (t, value, h').
    """
    m = rule.model
    wild = _Wild(wild_sol)
    a1 = a2 * (1.0 + rule.C * rule.s0) if not rule.large else a2 / rule.a_star
    uL, uR = rule.u_L, rule.u_R
    out = []
    for (ta, tb), (xa, xb), v in zip(zip(path.t[:-1], path.t[1:]), zip(path.x[:-1], path.x[1:]), path.speed):
        if tb <= ta:
            continue
        tm = 0.5 * (ta + tb)
        xm = 0.5 * (xa + xb)
        k = wild.epoch(tm)
        wl, wr = _wild_traces_at(wild, k, tm, xm)
        um = _conserved(m, wl)
        up = _conserved(m, wr)
        val = (a2 * (m.rel_entropy_flux(up, uR) - v * m.rel_entropy(up, uR))
               - a1 * (m.rel_entropy_flux(um, uL) - v * m.rel_entropy(um, uL)))
        out.append((tm, float(val), v))
    return np.array(out).reshape(-1, 3)


def weighted_shift_functional(rule, path, wild_sol, t, interval, a2=1.0):
    """E_t = a1 int_{lo}^{h(t)} eta(u|u_L) + a2 int_{h(t)}^{hi} eta(u|u_R) for the wild u."""
    a1 = a2 * (1.0 + rule.C * rule.s0) if not rule.large else a2 / rule.a_star
    prof = wild_sol.sample(t)
    frame = _FrameView(rule.u_L, rule.u_R)
    return shift_functional(rule.model, prof, frame, a1, a2, float(path(t)), interval)


@dataclass
class _FrameView:
    u_L: np.ndarray
    u_R: np.ndarray
