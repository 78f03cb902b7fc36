"""Relative-entropy dissipation around a single 1-shock.

For a shock (u_L, u_R, sigma_LR) of strength s0 and weight ratio a1/a2 = 1 + C s0:

    tilde_eta(u) = (1 + C s0) eta(u|u_L) - eta(u|u_R)
    tilde_q(u)   = (1 + C s0) q(u;u_L)   - q(u;u_R)
    D_cont(u)    = -tilde_q(u) + lambda_1(u) tilde_eta(u)
    D_RH(u-, u+, sig) = [q(u+;u_R) - sig eta(u+|u_R)] - (1 + C s0)[q(u-;u_L) - sig eta(u-|u_L)]

Pi = {tilde_eta < 0} is a small convex set around u_L; Pi* adds the ball of
radius K_ball/C around the maximizer u* of D_cont on the boundary of Pi.
Everything here is vectorized over the leading axes of conserved-state arrays.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .models import ConsistencyError, DomainError

__all__ = [
    "ShockFrame",
    "PiGeometry",
    "make_frame",
    "tilde_eta",
    "tilde_q",
    "grad_tilde_eta",
    "d_cont",
    "d_rh",
    "shock_family_curve",
    "quantified_identity_residual",
    "build_pi_geometry",
    "maximal_shock",
    "curve_convexity_horizon",
    "flux_convexity_check",
    "negativity_scan",
    "weighted_rel_entropy",
    "shift_functional",
    "overtaking_G",
    "overtaking_root",
    "wave_ratio_function",
]


@dataclass
class ShockFrame:
    model: object
    u_L: np.ndarray
    u_R: np.ndarray
    sigma_LR: float
    s0: float
    C: float
    family: int = 1

    @property
    def weight_ratio(self):
        return 1.0 + self.C * self.s0


def make_frame(model, u_L, s0, C, family=1, strength="log-density"):
    """Frame of the exact 1-shock of strength s0 issued from u_L.

    ``strength='log-density'`` reads s0 as the Riemann-unit strength
    2|ln(rho_R/rho_L)| (isothermal convention); ``'arclength'`` finds the shock
    whose Euclidean jump |u_R - u_L| equals s0.
    """
    u_L = model.check(np.asarray(u_L, dtype=float))
    if strength == "log-density":
        sig = s0
    elif strength == "arclength":
        def gap(s):
            return np.linalg.norm(model.shock_curve(family, u_L, -s) - u_L) - s0
        sig = optimize.brentq(gap, 1e-14, 50.0 * s0 + 1.0, xtol=1e-15)
    else:
        raise ValueError(f"unknown strength convention {strength!r}")
    u_R = model.shock_curve(family, u_L, -sig)
    speed = model.rh_shock_speed(u_L, u_R)
    return ShockFrame(model, u_L, u_R, speed, float(s0), float(C), family)


def _lam(model, family, u):
    return model.eigenvalues(u)[..., family - 1]


def tilde_eta(frame, u):
    m = frame.model
    return frame.weight_ratio * m.rel_entropy(u, frame.u_L) - m.rel_entropy(u, frame.u_R)


def tilde_q(frame, u):
    m = frame.model
    return frame.weight_ratio * m.rel_entropy_flux(u, frame.u_L) - m.rel_entropy_flux(u, frame.u_R)


def grad_tilde_eta(frame, u):
    m = frame.model
    g = m.entropy_grad(u)
    gl = m.entropy_grad(frame.u_L)
    gr = m.entropy_grad(frame.u_R)
    return frame.C * frame.s0 * (g - gl) - (gl - gr)


def d_cont(frame, u, form="compact"):
    """Continuous dissipation; ``form='definition'`` evaluates the unexpanded formula."""
    m = frame.model
    lam = _lam(m, frame.family, u)
    if form == "compact":
        return -tilde_q(frame, u) + lam * tilde_eta(frame, u)
    return ((m.rel_entropy_flux(u, frame.u_R) - lam * m.rel_entropy(u, frame.u_R))
            - frame.weight_ratio * (m.rel_entropy_flux(u, frame.u_L) - lam * m.rel_entropy(u, frame.u_L)))


def d_rh(frame, u_minus, u_plus, sigma, check=True):
    """Rankine-Hugoniot dissipation of a 1-shock (u-, u+, sigma) against the frame."""
    m = frame.model
    u_minus = np.asarray(u_minus, dtype=float)
    u_plus = np.asarray(u_plus, dtype=float)
    if check and u_minus.ndim == 1 and not np.allclose(u_minus, u_plus, rtol=0, atol=1e-14):
        try:
            speed = m.rh_shock_speed(u_minus, u_plus)
        except ConsistencyError as exc:
            raise DomainError(f"not a shock: {exc}") from exc
        if abs(speed - sigma) > 1e-9 * max(1.0, abs(speed)):
            raise DomainError("speed does not match the Rankine-Hugoniot speed")
        lam_m = _lam(m, frame.family, u_minus)
        lam_p = _lam(m, frame.family, u_plus)
        if not (lam_p < speed < lam_m):
            raise DomainError("shock violates the Lax entropy condition")
    a = frame.weight_ratio
    return ((m.rel_entropy_flux(u_plus, frame.u_R) - sigma * m.rel_entropy(u_plus, frame.u_R))
            - a * (m.rel_entropy_flux(u_minus, frame.u_L) - sigma * m.rel_entropy(u_minus, frame.u_L)))


# -- shock curves parameterized by strength s >= 0 -------------------------------

def shock_family_curve(model, family, u, s):
    """S_u(s) and its speed sigma_u(s), vectorized over states ``u`` (scalar s >= 0)."""
    u = model.check(np.asarray(u, dtype=float))
    w = model.to_riemann(u)
    wt = tuple(np.moveaxis(w, -1, 0))
    sig = -float(s)
    out = model.advance(family, wt, sig, model.curve_defect(sig))
    speed = model.shock_speed_w(family, wt, sig) if s > 0 else model.char_speed(family, wt)
    return model.from_riemann(np.stack(np.broadcast_arrays(*out), axis=-1)), speed


def _speed_rate(model, family, u, s, h=1e-6):
    """d sigma_u(s)/ds by central differences (one-sided at s = 0)."""
    if s > h:
        return (shock_family_curve(model, family, u, s + h)[1] - shock_family_curve(model, family, u, s - h)[1]) / (2 * h)
    return (shock_family_curve(model, family, u, s + h)[1] - shock_family_curve(model, family, u, s)[1]) / h


def _speed_rate_exact(model, family, w, s):
    """Analytic d sigma/ds for the models with closed-form shock speeds."""
    if model.kind == "isothermal":
        return -0.25 * math.exp(0.25 * s) if family == 1 else -0.25 * math.exp(-0.25 * s)
    return -0.5


def quantified_identity_residual(model, v, u, family, s, tol=1e-10):
    """|LHS - RHS| of the entropy identity along the shock curve from u.

    LHS = q(S_u(s); v) - sigma(s) eta(S_u(s)|v)
    RHS = q(u; v) - sigma(s) eta(u|v) + int_0^s sigma'(t) eta(u|S_u(t)) dt
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if s == 0:
        return 0.0
    w = tuple(model.to_riemann(u))
    S, sig = shock_family_curve(model, family, u, s)
    lhs = model.rel_entropy_flux(S, v) - sig * model.rel_entropy(S, v)

    def integrand(t):
        St, _ = shock_family_curve(model, family, u, t)
        return _speed_rate_exact(model, family, w, t) * float(model.rel_entropy(u, St))

    val, err = integrate.quad(integrand, 0.0, s, epsabs=tol, epsrel=tol, limit=200)
    if not np.isfinite(val):
        raise RuntimeError("quadrature did not converge")
    rhs = model.rel_entropy_flux(u, v) - sig * model.rel_entropy(u, v) + val
    return float(abs(lhs - rhs))


# -- Pi geometry -------------------------------------------------------------------

@dataclass
class PiGeometry:
    frame: ShockFrame
    angles: np.ndarray
    radii: np.ndarray
    boundary: np.ndarray
    u_star: np.ndarray
    r_ball: float
    K_ball: float
    certificate: float = 0.0
    warnings: list = field(default_factory=list)

    def in_pi(self, u):
        return tilde_eta(self.frame, u) < 0

    def in_pi_star(self, u, closed=False):
        u = np.asarray(u, dtype=float)
        te = tilde_eta(self.frame, u)
        d = np.linalg.norm(u - self.u_star, axis=-1)
        if closed:
            return (te <= 0) | (d <= self.r_ball)
        return (te < 0) | (d < self.r_ball)

    @property
    def diameter(self):
        b = self.boundary
        diff = b[:, None, :] - b[None, :, :]
        return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))

    def bounding_box(self):
        lo = np.minimum(self.boundary.min(axis=0), self.u_star - self.r_ball)
        hi = np.maximum(self.boundary.max(axis=0), self.u_star + self.r_ball)
        return lo, hi


def _ray_root(frame, direction, r_hi_guess):
    u_L = frame.u_L

    def f(r):
        try:
            return float(tilde_eta(frame, u_L + r * direction))
        except DomainError:
            return np.inf

    r_hi = r_hi_guess
    for _ in range(80):
        val = f(r_hi)
        if val > 0:
            break
        r_hi *= 1.6
    else:
        raise RuntimeError("boundary of Pi not bracketed along a ray")
    if not np.isfinite(val):
        # shrink back into the admissible set until the sign flips inside it
        lo, hi = 0.0, r_hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm > 0 and np.isfinite(fm):
                r_hi = mid
                break
            if np.isfinite(fm):
                lo = mid
            else:
                hi = mid
    return optimize.brentq(f, 0.0, r_hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def build_pi_geometry(frame, K_ball=0.5, n_rays=720):
    """Sample the boundary of Pi by radial Brent roots and locate u* and Pi*."""
    m = frame.model
    if not tilde_eta(frame, frame.u_L) < 0 < tilde_eta(frame, frame.u_R):
        raise ValueError("frame does not separate u_L and u_R")
    guess = 0.5 * float(np.linalg.norm(frame.u_R - frame.u_L))
    if frame.u_L.size == 1:
        # scalar case: Pi is an interval, its boundary two points
        angles = np.array([0.0, np.pi])
        radii = np.array([_ray_root(frame, np.array([d]), guess) for d in (1.0, -1.0)])
        boundary = frame.u_L + (radii * np.array([1.0, -1.0]))[:, None]
        u_star = boundary[int(np.argmax(d_cont(frame, boundary)))]
        return PiGeometry(frame, angles, radii, boundary, u_star, K_ball / frame.C, K_ball, 0.0, [])
    angles = np.linspace(0.0, 2.0 * np.pi, n_rays, endpoint=False)
    radii = np.empty(n_rays)
    for k, th in enumerate(angles):
        d = np.array([math.cos(th), math.sin(th)])
        radii[k] = _ray_root(frame, d, guess)
        guess = max(radii[k], 1e-12)
    boundary = frame.u_L + radii[:, None] * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    dvals = d_cont(frame, boundary)
    k = int(np.argmax(dvals))
    warnings = []
    order = np.argsort(dvals)[::-1]
    if n_rays > 8:
        runner_up = next((j for j in order[1:] if min(abs(j - k), n_rays - abs(j - k)) > 3), None)
        if runner_up is not None and dvals[k] - dvals[runner_up] < 1e-14 * max(1.0, abs(dvals[k])):
            warnings.append("D_cont has two boundary maxima within tolerance")

    def neg_d(theta):
        d = np.array([math.cos(theta), math.sin(theta)])
        r = _ray_root(frame, d, radii[k])
        return -float(d_cont(frame, frame.u_L + r * d))

    dth = angles[1] - angles[0]
    res = optimize.minimize_scalar(neg_d, bounds=(angles[k] - dth, angles[k] + dth), method="bounded",
                                   options={"xatol": 1e-12})
    th = float(res.x)
    d = np.array([math.cos(th), math.sin(th)])
    u_star = frame.u_L + _ray_root(frame, d, radii[k]) * d
    # certificate: grad tilde_eta parallel to the left eigenvector l_1
    g = grad_tilde_eta(frame, u_star)
    l1 = _left_eigvec(m, u_star, frame.family)
    cert = abs(g[0] * l1[1] - g[1] * l1[0]) / (np.linalg.norm(g) * np.linalg.norm(l1))
    return PiGeometry(frame, angles, radii, boundary, u_star, K_ball / frame.C, K_ball, float(cert), warnings)


def _left_eigvec(model, u, family):
    h = 1e-7
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h * max(1.0, abs(u[j]))
        J[:, j] = (model.flux(u + e) - model.flux(u - e)) / (2 * e[j])
    vals, vecs = np.linalg.eig(J.T)
    order = np.argsort(vals.real)
    return vecs[:, order[family - 1]].real


def maximal_shock(geom, u, s_cap=50.0):
    """(s*, u+) maximizing D_RH along the shock curve from u: eta(u|S(s*)) = -tilde_eta(u)."""
    frame = geom.frame
    m = frame.model
    u = np.asarray(u, dtype=float)
    te = float(tilde_eta(frame, u))
    if te >= 0:
        return 0.0, u.copy()

    def g(s):
        S, _ = shock_family_curve(m, frame.family, u, s)
        return float(m.rel_entropy(u, S)) + te

    hi = max(frame.s0, 1e-6)
    while g(hi) < 0:
        hi *= 2.0
        if hi > s_cap:
            raise RuntimeError("maximal shock not bracketed")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    s_star = 0.5 * (lo + hi)
    return s_star, shock_family_curve(m, frame.family, u, s_star)[0]


def curve_convexity_horizon(model, family, states, s_max=2.0, n=400):
    """Largest t such that d^2/ds^2 eta(u|S_u(s)) >= lam on [0, t] for all sampled u.

    lam is half the smallest curvature at s = 0 over the samples.
    """
    states = np.atleast_2d(states)
    s = np.linspace(0.0, s_max, n + 1)
    h = s[1] - s[0]
    vals = np.empty((s.size, states.shape[0]))
    for k, sk in enumerate(s):
        S, _ = shock_family_curve(model, family, states, sk)
        vals[k] = model.rel_entropy(states, S)
    d2 = (vals[2:] - 2 * vals[1:-1] + vals[:-2]) / (h * h)
    # second derivative at 0 from the even extension in s is unreliable, use the first interior point
    lam = 0.5 * float(d2[0].min())
    ok = np.all(d2 >= lam, axis=1)
    bad = np.flatnonzero(~ok)
    t_bar = s[1 + bad[0]] if bad.size else s_max
    return float(t_bar), lam


def _flux_jacobian(model, u, h=1e-6):
    u = np.asarray(u, dtype=float)
    cols = []
    for k in range(u.size):
        e = np.zeros_like(u)
        e[k] = h
        cols.append((model.flux(u + e) - model.flux(u - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def flux_convexity_check(model, family, base, states, h=1e-4):
    """Smallest Hessian eigenvalue of u -> l . f(u) over ``states``.

    l is the left eigenvector of family ``family`` at ``base``, signed so that
    its last component is positive.  Central differences; logged, not gated.
    """
    base = np.asarray(base, dtype=float)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = base.size
    if n == 1:
        ell = np.ones(1)
    else:
        vals, vecs = np.linalg.eig(_flux_jacobian(model, base).T)
        ell = np.real(vecs[:, np.argsort(np.real(vals))[family - 1]])
        ell = ell * np.sign(ell[-1])
    g = lambda u: float(ell @ model.flux(u))
    worst = np.inf
    eye = np.eye(n) * h
    for u in states:
        H = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                H[i, j] = (g(u + eye[i] + eye[j]) - g(u + eye[i] - eye[j])
                           - g(u - eye[i] + eye[j]) + g(u - eye[i] - eye[j])) / (4 * h * h)
        worst = min(worst, float(np.linalg.eigvalsh(0.5 * (H + H.T)).min()))
    return worst


def _admissible(model, U):
    ok = np.ones(len(U), dtype=bool)
    for k, u in enumerate(U):
        try:
            model.check(u)
        except DomainError:
            ok[k] = False
    return ok


def negativity_scan(frame, K_ball=0.5, n_grid=50, n_s=24, geom=None):
    """Sample D_cont on Pi* and D_RH(u, S_u(s)) for u on an n x n grid of Pi*, s in (0, t_bar].

    Returns a dict with worst margins, fitted constants and CSV-ready rows
    (u1, u2, s, D_value, bound_rhs, margin) where bound_rhs = -s0 (|u-u_L|^2 + |u_+-u_R|^2)
    and margin = D_value (strict negativity is what is gated).
    """
    m = frame.model
    if geom is None:
        geom = build_pi_geometry(frame, K_ball)
    lo, hi = geom.bounding_box()
    g1 = np.linspace(lo[0], hi[0], n_grid)
    g2 = np.linspace(lo[1], hi[1], n_grid)
    U = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1).reshape(-1, 2)
    U = U[_admissible(m, U)]
    inside = geom.in_pi_star(U)
    U = U[inside]
    # also the boundary samples themselves (closure of Pi)
    U = np.concatenate([U, geom.boundary, geom.u_star[None, :]], axis=0)
    dist2 = lambda a, b: np.sum((a - b) ** 2, axis=-1)
    dc = d_cont(frame, U)
    w_cont = frame.s0 * (dist2(U, frame.u_L) + dist2(U, frame.u_R))
    rows = [(u[0], u[1], 0.0, d, -w, d) for u, d, w in zip(U, dc, w_cont)]
    t_bar, lam = curve_convexity_horizon(m, frame.family, np.concatenate([geom.boundary[::30], U[::max(1, len(U) // 60)]]))
    s_vals = t_bar * (np.arange(1, n_s + 1) / n_s) ** 2
    drh_max = -np.inf
    k_rh = np.inf
    for s in s_vals:
        S, sig = shock_family_curve(m, frame.family, U, s)
        dr = d_rh(frame, U, S, sig, check=False)
        w = frame.s0 * (dist2(U, frame.u_L) + dist2(S, frame.u_R))
        drh_max = max(drh_max, float(dr.max()))
        k_rh = min(k_rh, float(np.min(-dr / w)))
        rows.extend((u[0], u[1], s, d, -ww, d) for u, d, ww in zip(U[::7], dr[::7], w[::7]))
    return {
        "n_states": int(U.shape[0]),
        "t_bar": t_bar,
        "lambda": lam,
        "dcont_max": float(dc.max()),
        "drh_max": drh_max,
        "K_cont": float(np.min(-dc / w_cont)),
        "K_rh": k_rh,
        "all_negative": bool(dc.max() < 0 and drh_max < 0),
        "flux_convexity_min_eig": flux_convexity_check(m, frame.family, frame.u_L, U[::max(1, len(U) // 40)]),
        "rows": rows,
        "geometry": geom,
    }


# -- weighted relative entropy ------------------------------------------------------

def _merged_cells(lo, hi, *breaks):
    pts = np.unique(np.concatenate([[lo, hi]] + [np.asarray(b, float) for b in breaks]))
    pts = pts[(pts >= lo) & (pts <= hi)]
    return pts


def weighted_rel_entropy(model, u_prof, psi_prof, weight=None, interval=(-1.0, 1.0)):
    """int a(x) eta(u(x) | psi(x)) dx over ``interval``, exact for piecewise-constant inputs.

    ``weight`` is None (a = 1) or a pair (breakpoints, values) with len(values) = len(breakpoints)+1.
    """
    lo, hi = interval
    breaks = [u_prof.x, psi_prof.x]
    if weight is not None:
        breaks.append(weight[0])
    pts = _merged_cells(lo, hi, *breaks)
    if pts.size < 2:
        return 0.0
    mid = 0.5 * (pts[:-1] + pts[1:])
    a = 1.0 if weight is None else np.asarray(weight[1])[np.searchsorted(weight[0], mid, side="right")]
    eta = model.rel_entropy(u_prof(mid), psi_prof(mid))
    return float(np.sum(a * eta * np.diff(pts)))


def shift_functional(model, u_prof, frame, a1, a2, h, interval=(-1.0, 1.0)):
    """E_t = a1 int_{lo}^{h} eta(u|u_L) + a2 int_{h}^{hi} eta(u|u_R)."""
    lo, hi = interval
    pts = _merged_cells(lo, hi, u_prof.x, [h])
    mid = 0.5 * (pts[:-1] + pts[1:])
    vals = u_prof(mid)
    left = mid < h
    e = np.where(left, a1 * model.rel_entropy(vals, frame.u_L), a2 * model.rel_entropy(vals, frame.u_R))
    return float(np.sum(e * np.diff(pts)))


# -- overtaking shock estimate ------------------------------------------------------

def wave_ratio_function(x):
    """Velocity drop across a backward wave with density ratio x (isothermal, Lagrangian form).

    (x - 1)/sqrt(x) on the shock branch x >= 1, log x on the rarefaction branch;
    continuous and strictly increasing.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(x >= 1.0, (x - 1.0) / np.sqrt(x), np.log(x))


def overtaking_G(B, b, bb):
    """G(B; b, bb) for two incoming backward shocks with density ratios b (left), bb (right).

    Traversing the waves before and after the interaction gives B F = b bb and
    Omega(B) - Omega_fwd(F) = Omega(b) + Omega(bb); with Omega_fwd(F) = -Omega(1/F)
    this is G(B) = Omega(B) + Omega(B/(b bb)) - Omega(b) - Omega(bb) = 0.
    """
    W = wave_ratio_function
    return W(B) + W(B / (b * bb)) - W(b) - W(bb)


def overtaking_root(b, bb, xtol=1e-14):
    """Outgoing ratios (B, F) for overtaking backward shocks b, bb >= 1, by Brent's method."""
    if b == 1.0 and bb == 1.0:
        return 1.0, 1.0
    lo = max(b, bb)
    hi = b * bb
    glo = float(overtaking_G(lo, b, bb))
    ghi = float(overtaking_G(hi, b, bb))
    # a ratio within rounding of 1 collapses the bracket onto its endpoints
    tol = 64 * np.finfo(float).eps * max(1.0, hi)
    if abs(ghi) <= tol and ghi < 0:
        return hi, b * bb / hi
    if abs(glo) <= tol and glo > 0:
        return lo, b * bb / lo
    if not (glo <= 0.0 <= ghi):
        raise RuntimeError(f"root not bracketed for b={b}, bb={bb}: G={glo:.3e}, {ghi:.3e}")
    B = optimize.brentq(lambda z: float(overtaking_G(z, b, bb)), lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return B, b * bb / B
