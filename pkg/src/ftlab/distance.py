"""Distances between piecewise-constant profiles.

Exact L1/L2 distances, the sweeping homotopy between two profiles, the
Upsilon weights of its elementary paths (small-BV and isothermal flavors) and
the resulting upper bound for the weighted distance d_nu.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .models import DomainError
from .riemann import solve_riemann_w

__all__ = [
    "WeightParams",
    "PathInterval",
    "PseudopolygonalPath",
    "merged_cells",
    "l1_distance",
    "l2_distance",
    "linf_distance",
    "jump_strengths",
    "approaching_sums",
    "wave_factors",
    "upsilon",
    "sweeping_path",
    "dnu_upper",
    "shifted_growth",
    "distance_rows_csv",
]


@dataclass
class WeightParams:
    """Constants of the Upsilon weights: K for small-BV, H1..H3 for isothermal."""

    K: float = 10.0
    H1: float = 1.0
    H2: float = 1.0
    H3: float = 1.0


def merged_cells(p, q, interval=None):
    """Breakpoints of the common refinement of two profiles, clipped to ``interval``."""
    pts = np.union1d(p.x, q.x)
    if interval is None:
        if pts.size == 0:
            return pts
        lo, hi = pts[0] - 1.0, pts[-1] + 1.0
    else:
        lo, hi = interval
        if hi <= lo:
            return np.array([])
    pts = pts[(pts > lo) & (pts < hi)]
    return np.concatenate([[lo], pts, [hi]])


def _far_fields_match(p, q, tol=1e-14):
    a = np.asarray(p.states[0]) - np.asarray(q.states[0])
    b = np.asarray(p.states[-1]) - np.asarray(q.states[-1])
    return max(np.max(np.abs(a)), np.max(np.abs(b))) <= tol


def _cell_values(p, q, interval):
    if interval is None and not _far_fields_match(p, q):
        raise DomainError("profiles differ at infinity; pass a bounded interval")
    pts = merged_cells(p, q, interval)
    if pts.size < 2:
        return np.array([]), np.zeros((0, 1)), np.zeros((0, 1)), pts
    mid = 0.5 * (pts[:-1] + pts[1:])
    return np.diff(pts), p(mid), q(mid), pts


def _wave_metric(model, nu, a_states, b_states):
    out = np.empty(len(a_states))
    wa = model.to_riemann(a_states)
    wb = model.to_riemann(b_states)
    for k in range(len(out)):
        fan = solve_riemann_w(model, nu, tuple(wa[k]), tuple(wb[k]), fan=False)
        out[k] = sum(abs(s) for s in fan.sigmas)
    return out


def l1_distance(p, q, interval=None, metric="conserved", nu=0.0):
    """int |p - q| dx, exact for piecewise-constant profiles.

    ``metric='conserved'`` uses the Euclidean norm of the conserved difference;
    ``metric='wave'`` uses sum_i |sigma_i| of the Riemann problem (p(x), q(x)) at ``nu``,
    the pointwise length the sweeping homotopy accumulates.
    """
    dx, pv, qv, _ = _cell_values(p, q, interval)
    if dx.size == 0:
        return 0.0
    if metric == "conserved":
        diff = np.linalg.norm(pv - qv, axis=-1)
    elif metric == "wave":
        diff = _wave_metric(p.model, nu, pv, qv)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return float(np.dot(dx, diff))


def l2_distance(p, q, interval=None):
    dx, pv, qv, _ = _cell_values(p, q, interval)
    if dx.size == 0:
        return 0.0
    return float(np.sqrt(np.dot(dx, np.sum((pv - qv) ** 2, axis=-1))))


def linf_distance(p, q, interval=None):
    dx, pv, qv, _ = _cell_values(p, q, interval)
    keep = dx > 0
    if not keep.any():
        return 0.0
    return float(np.max(np.linalg.norm(pv - qv, axis=-1)[keep]))


# -- wave configurations -------------------------------------------------------------

def jump_strengths(profile, nu):
    """(family, sigma, x) of every nonzero wave in the Riemann fans at the profile's jumps."""
    model = profile.model
    fam, sig, pos = [], [], []
    for k, xk in enumerate(profile.x):
        fan = solve_riemann_w(model, nu, profile.states[k], profile.states[k + 1], fan=False)
        for f, s in enumerate(fan.sigmas, start=1):
            if s != 0.0:
                fam.append(f)
                sig.append(s)
                pos.append(xk)
    return np.array(fam, dtype=np.int64), np.array(sig, dtype=float), np.array(pos, dtype=float)


def approaching_sums(fam, sig):
    """For each wave, the total |sigma| of the waves it approaches, and Q.

    Waves are ordered left to right (family 1 before family 2 at a common point).
    A pair (left a, right b) approaches when a is a 2-wave and b a 1-wave, or
    both share a family and at least one is a shock.
    """
    fam = np.asarray(fam)
    sig = np.asarray(sig, dtype=float)
    mag = np.abs(sig)
    shock = sig < 0
    acc = np.zeros_like(mag)
    for f in (1, 2):
        mf = fam == f
        if not mf.any():
            continue
        m_all = np.where(mf, mag, 0.0)
        m_sh = np.where(mf & shock, mag, 0.0)
        left_all = np.cumsum(m_all) - m_all
        left_sh = np.cumsum(m_sh) - m_sh
        right_all = m_all.sum() - np.cumsum(m_all)
        right_sh = m_sh.sum() - np.cumsum(m_sh)
        same = np.where(shock, left_all + right_all, left_sh + right_sh)
        acc += np.where(mf, same, 0.0)
        if f == 2:
            acc += np.where(fam == 1, left_all, 0.0)   # 2-waves to the left of a 1-wave
        else:
            acc += np.where(fam == 2, right_all, 0.0)  # 1-waves to the right of a 2-wave
    Q = 0.5 * float(np.dot(mag, acc))
    return acc, Q


def wave_factors(fam, sig, flavor, params=None):
    """Per-wave weight factor of Upsilon for one configuration.

    small-bv:   R = (2 + sgn sigma)(1 + K sum_{approaching} |sigma'|) exp(K Q)
    isothermal: exp(H1 S + H2 R_alpha + H3 V1) with
                S = 2 sum (sigma)_- - (sigma)_-,
                R_alpha = |2-waves to the left| + |1-waves to the right|,
                V1 = Q, the interaction potential of the configuration.
    """
    params = params or WeightParams()
    fam = np.asarray(fam)
    sig = np.asarray(sig, dtype=float)
    if sig.size == 0:
        return np.zeros(0)
    mag = np.abs(sig)
    if flavor == "small-bv":
        acc, Q = approaching_sums(fam, sig)
        return (2.0 + np.sign(sig)) * (1.0 + params.K * acc) * np.exp(params.K * Q)
    if flavor == "isothermal":
        neg = np.maximum(-sig, 0.0)
        S = 2.0 * neg.sum() - neg
        m2 = np.where(fam == 2, mag, 0.0)
        m1 = np.where(fam == 1, mag, 0.0)
        R = (np.cumsum(m2) - m2) + (m1.sum() - np.cumsum(m1))
        Q = approaching_sums(fam, sig)[1]
        return np.exp(params.H1 * S + params.H2 * R + params.H3 * Q)
    raise ValueError(f"unknown flavor {flavor!r}")


# -- pseudopolygonal paths ---------------------------------------------------------

@dataclass
class PathInterval:
    """One elementary path: constant configuration for theta in (a, b)."""

    a: float
    b: float
    x: np.ndarray      # jump positions at the interval's left end
    xi: np.ndarray     # shift rate of each jump
    fam: np.ndarray
    sig: np.ndarray

    def l1_rate(self):
        return float(np.sum(np.abs(self.sig * self.xi)))


@dataclass
class PseudopolygonalPath:
    intervals: list = field(default_factory=list)
    flavor: str = "isothermal"
    params: WeightParams = field(default_factory=WeightParams)

    def l1_length(self):
        return float(sum((iv.b - iv.a) * iv.l1_rate() for iv in self.intervals))

    def length(self):
        return float(sum((iv.b - iv.a) * upsilon(iv, self.flavor, self.params) for iv in self.intervals))

    def max_factor(self):
        """Largest per-wave weight factor over the moving waves (an admissible K2)."""
        best = 1.0
        for iv in self.intervals:
            f = wave_factors(iv.fam, iv.sig, self.flavor, self.params)
            moving = (iv.xi != 0) & (iv.sig != 0)
            if moving.any():
                best = max(best, float(f[moving].max()))
        return best

    def ordered(self):
        """Jump order is preserved along every elementary path."""
        for iv in self.intervals:
            for th in (iv.a, iv.b):
                pos = iv.x + iv.xi * (th - iv.a)
                if np.any(np.diff(pos) < -1e-14):
                    return False
        return True


def upsilon(interval, flavor="isothermal", params=None):
    """Upsilon_xi = sum |sigma xi| * factor for one elementary path."""
    if interval.sig.size == 0:
        return 0.0
    f = wave_factors(interval.fam, interval.sig, flavor, params)
    return float(np.sum(np.abs(interval.sig * interval.xi) * f))


def sweeping_path(u, ubar, nu, flavor="isothermal", params=None):
    """Homotopy theta -> u on (-inf, theta], ubar on (theta, inf).

    On each cell between merged breakpoints the moving jump at theta carries
    the Riemann fan (u(theta), ubar(theta)); jumps of u to its left and of ubar
    to its right stay fixed.
    """
    if not _far_fields_match(u, ubar):
        raise DomainError("sweeping path needs equal far fields")
    model = u.model
    path = PseudopolygonalPath(flavor=flavor, params=params or WeightParams())
    pts = np.union1d(u.x, ubar.x)
    if pts.size == 0:
        return path
    fu, su, xu = jump_strengths(u, nu)
    fb, sb, xb = jump_strengths(ubar, nu)
    wu = u.states
    wb = ubar.states
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        th = 0.5 * (a + b)
        ku = int(np.searchsorted(u.x, th, side="right"))
        kb = int(np.searchsorted(ubar.x, th, side="right"))
        fan = solve_riemann_w(model, nu, wu[ku], wb[kb], fan=False)
        mf = [f for f, s in enumerate(fan.sigmas, start=1) if s != 0.0]
        ms = [s for s in fan.sigmas if s != 0.0]
        if not ms:
            continue
        left = xu < th
        right = xb > th
        fam = np.concatenate([fu[left], mf, fb[right]]).astype(np.int64)
        sig = np.concatenate([su[left], ms, sb[right]])
        x = np.concatenate([xu[left], [a] * len(ms), xb[right]])
        xi = np.concatenate([np.zeros(left.sum()), np.ones(len(ms)), np.zeros(right.sum())])
        path.intervals.append(PathInterval(float(a), float(b), x, xi, fam, sig))
    return path


def dnu_upper(u, ubar, nu, flavor="isothermal", params=None):
    """Weighted length of the sweeping path: a certified upper bound for d_nu(u, ubar)."""
    return sweeping_path(u, ubar, nu, flavor, params).length()


def shifted_growth(v_sol, psi_sol, tau, flavor="isothermal", params=None, shift_cost=0.0, K=None):
    """(dnu_upper(v(tau), psi(tau)), K * shift_cost) for a run and its shifted twin.

    ``K`` defaults to the largest weight factor met along the sweeping path.
    """
    v_prof = v_sol.sample(tau)
    p_prof = psi_sol.sample(tau)
    v0 = v_sol.sample(0.0)
    p0 = psi_sol.sample(0.0)
    if l1_distance(v0, p0) > 1e-12:
        raise DomainError("runs do not share initial data")
    path = sweeping_path(v_prof, p_prof, v_sol.nu, flavor, params)
    K = path.max_factor() if K is None else K
    return path.length(), K * shift_cost


def distance_rows_csv(rows):
    """CSV text for (t, l1, l2, dnu_upper, bound_rhs) rows."""
    buf = io.StringIO()
    buf.write("# ftlab distance report v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "l1", "l2", "dnu_upper", "bound_rhs"])
    for r in rows:
        w.writerow([repr(float(v)) for v in r])
    return buf.getvalue()
