"""nu-approximate Riemann solver.

The i-wave curve through ``w`` is blended between shock and rarefaction
branches by a cutoff of width sqrt(nu):

    Phi_i(w, sigma) = c(sigma/sqrt(nu)) S_i(w, sigma) + (1 - c) R_i(w, sigma)

In Riemann coordinates both branches differ only by the common defect
phi(sigma) (zero for Temple-class models), so the blended curve moves ``w``
by ``sigma`` in its own coordinate plus ``g(sigma) = c * phi(sigma)`` in both.
Rarefactions are cut into jumps on the absolute nu-grid of their Riemann
coordinate; shock-type fronts travel at the averaged speed lambda^phi.
Family-2 curves mirror the family-1 construction: the same defect, with the
roles of w1 and w2 exchanged.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .models import DomainError

__all__ = [
    "SolverError",
    "Wave",
    "RiemannFan",
    "cutoff_phi",
    "cutoff_phi_deriv",
    "blend_defect",
    "interp_curve",
    "solve_riemann",
    "solve_riemann_w",
    "discretize_rarefaction",
    "front_speed",
    "rarefaction_mean_speed",
    "exact_edge_speeds",
]

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
GRID_SNAP = 1e-9  # relative to nu


class SolverError(RuntimeError):
    """Intermediate-state solve did not converge."""

    def __init__(self, msg, residual=float("nan")):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


def cutoff_phi(s):
    """Cubic smoothstep: 1 for s <= -2, 0 for s >= -1, monotone in between."""
    if np.ndim(s) == 0:
        s = float(s)
        if s <= -2.0:
            return 1.0
        if s >= -1.0:
            return 0.0
        t = s + 2.0
        return 1.0 - t * t * (3.0 - 2.0 * t)
    s = np.asarray(s, dtype=float)
    t = np.clip(s + 2.0, 0.0, 1.0)
    return 1.0 - t * t * (3.0 - 2.0 * t)


def cutoff_phi_deriv(s):
    if np.ndim(s) == 0:
        s = float(s)
        if s <= -2.0 or s >= -1.0:
            return 0.0
        t = s + 2.0
        return -6.0 * t * (1.0 - t)
    s = np.asarray(s, dtype=float)
    t = s + 2.0
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, -6.0 * t * (1.0 - t), 0.0)


def _blend_weight(sigma, nu):
    if sigma >= 0.0:
        return 0.0
    if nu <= 0.0:
        return 1.0
    return cutoff_phi(sigma / math.sqrt(nu))


def blend_defect(model, sigma, nu):
    """g(sigma) = c(sigma/sqrt(nu)) * phi(sigma); nu = 0 gives the exact shock branch."""
    if sigma >= 0.0:
        return 0.0
    c = _blend_weight(sigma, nu)
    return c * model.curve_defect(sigma) if c else 0.0


def blend_defect_deriv(model, sigma, nu):
    if sigma >= 0.0:
        return 0.0
    phi = model.curve_defect(sigma)
    dphi = model.curve_defect_deriv(sigma)
    if nu <= 0.0:
        return dphi
    rn = math.sqrt(nu)
    return cutoff_phi_deriv(sigma / rn) / rn * phi + cutoff_phi(sigma / rn) * dphi


def interp_curve(model, family, v, sigma, nu):
    """Phi_i^nu(v, sigma) on conserved states."""
    w = tuple(model.to_riemann(model.check(v)))
    out = model.advance(family, w, sigma, blend_defect(model, sigma, nu))
    return model.from_riemann(model.validate_w(out))


@dataclass
class Wave:
    """One outgoing jump of a Riemann fan (Riemann-coordinate states)."""

    family: int
    sigma: float
    speed: float
    left: tuple
    right: tuple

    @property
    def kind(self):
        return "shock" if self.sigma < 0 else "fan"


@dataclass
class RiemannFan:
    sigma1: float
    sigma2: float
    w_left: tuple
    w_mid: tuple
    w_right: tuple
    waves: list = field(default_factory=list)
    iterations: int = 0
    residual: float = 0.0

    @property
    def sigmas(self):
        return (self.sigma1,) if self.sigma2 is None else (self.sigma1, self.sigma2)


def _snap(a):
    r = round(a)
    return float(r) if abs(a - r) < GRID_SNAP else a


def _with_coord(w, family, value):
    if len(w) == 1:
        return (value,)
    return (value, w[1]) if family == 1 else (w[0], value)


def _grid_points(lo, hi, nu):
    """Breakpoints of [lo, hi] refined by the nu-grid, tiny slivers removed."""
    a = _snap(lo / nu)
    b = _snap(hi / nu)
    j0 = math.floor(a) + 1
    j1 = math.ceil(b) - 1
    pts = [lo]
    tol = GRID_SNAP * nu
    for j in range(j0, j1 + 1):
        p = j * nu
        if p - lo > tol and hi - p > tol:
            pts.append(p)
    pts.append(hi)
    return pts


def discretize_rarefaction(model, nu, family, w_from, sigma):
    """Cut a rarefaction of strength sigma > 0 into jumps on the nu-grid.

    Each jump sits inside one grid cell [j nu, (j+1) nu] and travels with the
    characteristic speed at the cell midpoint.
    """
    if sigma <= 0:
        raise ValueError("rarefaction strength must be positive")
    w_from = tuple(w_from)
    lo = w_from[family - 1]
    hi = lo + sigma
    if nu <= 0:
        raise ValueError("rarefaction fans need nu > 0")
    pts = _grid_points(lo, hi, nu)
    waves = []
    for p, q in zip(pts[:-1], pts[1:]):
        cell = math.floor(_snap(0.5 * (p + q) / nu))
        mid = _with_coord(w_from, family, (cell + 0.5) * nu)
        waves.append(Wave(family, q - p, model.char_speed(family, mid),
                          _with_coord(w_from, family, p), _with_coord(w_from, family, q)))
    return waves


def rarefaction_mean_speed(model, nu, family, w_left, sigma):
    """lambda^r: cell-measure weighted mean of midpoint characteristic speeds."""
    hi = w_left[family - 1]
    lo = hi + sigma
    if nu <= 0 or sigma == 0:
        return model.char_speed(family, w_left)
    pts = np.asarray(_grid_points(lo, hi, nu))
    meas = np.diff(pts)
    cells = np.floor(0.5 * (pts[:-1] + pts[1:]) / nu)
    mids = (cells + 0.5) * nu
    speeds = np.array([model.char_speed(family, _with_coord(w_left, family, m)) for m in mids])
    return float(np.dot(meas, speeds) / abs(sigma))


def front_speed(model, nu, family, w_left, sigma):
    """Averaged speed lambda^phi of a shock-type front (sigma < 0)."""
    if sigma >= 0:
        raise ValueError("front_speed is for shock-type fronts (sigma < 0)")
    c = _blend_weight(sigma, nu)
    if c == 1.0:
        return model.shock_speed_w(family, w_left, sigma)
    lam_r = rarefaction_mean_speed(model, nu, family, w_left, sigma)
    if c == 0.0:
        return lam_r
    return c * model.shock_speed_w(family, w_left, sigma) + (1.0 - c) * lam_r


def _solve_strength(model, nu, d1, dd):
    """Root of F(s) = s + g(s) + g(s - dd) - d1 (monotone, F' >= 1)."""
    def fun(s):
        return s + blend_defect(model, s, nu) + blend_defect(model, s - dd, nu) - d1

    lo, hi = d1, max(d1, dd, 0.0)
    s = d1  # decoupled (zero defect) initial guess
    f = fun(s)
    it = 0
    if abs(f) <= NEWTON_TOL:
        return s, f, it
    for it in range(1, NEWTON_MAXIT + 1):
        if f < 0:
            lo = s
        else:
            hi = s
        df = 1.0 + blend_defect_deriv(model, s, nu) + blend_defect_deriv(model, s - dd, nu)
        step = f / df
        s_new = s - step
        # damping: halve until the residual drops, never leave the bracket
        lam = 1.0
        while True:
            if not (lo <= s_new <= hi):
                s_new = 0.5 * (lo + hi)
                break
            f_new = fun(s_new)
            if abs(f_new) < abs(f) or lam < 1e-4:
                break
            lam *= 0.5
            s_new = s - lam * step
        s = s_new
        f = fun(s)
        if abs(f) <= NEWTON_TOL:
            return s, f, it
    # bisection fallback on the monotone residual
    flo = fun(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if abs(fm) <= NEWTON_TOL or hi - lo < 1e-15 * max(1.0, abs(mid)):
            return mid, fm, it
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise SolverError("intermediate-state solve failed", abs(fm))


def solve_riemann_w(model, nu, wl, wr, fan=True):
    """Riemann-coordinate kernel of :func:`solve_riemann`."""
    wl = tuple(wl)
    wr = tuple(wr)
    if model.n_families == 1:
        s1 = wr[0] - wl[0]
        out = RiemannFan(s1, None, wl, wr, wr)
        if fan and s1 != 0.0:
            out.waves = _waves_for(model, nu, 1, wl, s1, wr)
        return out
    d1 = wr[0] - wl[0]
    d2 = wr[1] - wl[1]
    if model.curve_defect(-1.0) == 0.0:
        s1, res, it = d1, 0.0, 0
    else:
        s1, res, it = _solve_strength(model, nu, d1, d1 - d2)
    s2 = s1 - (d1 - d2)
    wm = model.advance(1, wl, s1, blend_defect(model, s1, nu))
    if not model.riemann_ok(wm):
        raise DomainError(f"intermediate state {wm} leaves the admissible set (vacuum)")
    out = RiemannFan(s1, s2, wl, wm, wr, iterations=it, residual=abs(res))
    if fan:
        waves = []
        if s1 != 0.0:
            waves += _waves_for(model, nu, 1, wl, s1, wm)
        if s2 != 0.0:
            waves += _waves_for(model, nu, 2, wm, s2, wr)
        out.waves = waves
    return out


def _waves_for(model, nu, family, w_from, sigma, w_to):
    if sigma > 0:
        waves = discretize_rarefaction(model, nu, family, w_from, sigma)
        waves[-1].right = w_to
        return waves
    speed = front_speed(model, nu, family, w_from, sigma)
    return [Wave(family, sigma, speed, w_from, w_to)]


def solve_riemann(model, nu, v_l, v_r):
    """Solve the nu-approximate Riemann problem between conserved states."""
    wl = tuple(float(x) for x in model.to_riemann(model.check(v_l)))
    wr = tuple(float(x) for x in model.to_riemann(model.check(v_r)))
    return solve_riemann_w(model, nu, wl, wr)


def exact_edge_speeds(model, v_l, v_r):
    """Exact (nu -> 0) Riemann solution: (sigma1, sigma2, w_mid, max 1-speed, min 2-speed).

    The family-1 edge is the shock speed or the rightmost characteristic
    lambda_1(w_mid); the family-2 edge is the shock speed or lambda_2(w_mid).
    """
    wl =tuple(float(x) for x in model.to_riemann(model.check(v_l)))
    wr = tuple(float(x) for x in model.to_riemann(model.check(v_r)))
    fan = solve_riemann_w(model, 0.0, wl, wr, fan=False)
    s1, s2, wm = fan.sigma1, fan.sigma2, fan.w_mid
    e1 = model.shock_speed_w(1, wl, s1) if s1 < 0 else model.char_speed(1, wm)
    e2 = model.shock_speed_w(2, wm, s2) if s2 < 0 else model.char_speed(2, wm)
    return s1, s2, wm, e1, e2
