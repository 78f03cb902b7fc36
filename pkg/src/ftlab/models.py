"""Hyperbolic models: isothermal Euler, Burgers and a decoupled Temple toy.

Conserved variables are the canonical representation of a state.  Every model
also exposes Riemann coordinates ``w`` in which rarefaction curves are plain
coordinate translations; the front tracking kernels work on ``w`` tuples of
Python floats for speed, the public functions on numpy arrays of conserved
variables (trailing axis = components, leading axes broadcast).

Isothermal Euler (unit sound speed, pressure p = rho):

    rho_t + (rho v)_x = 0,   (rho v)_t + (rho v^2 + rho)_x = 0
    w = (v - log rho, v + log rho),  lambda = (v - 1, v + 1)
    eta = m^2/(2 rho) + rho log rho,  q = m v^2/2 + m log rho + m

Wave strengths are measured in Riemann units, sigma = -/+ 2 log(rho_r/rho_l)
for family 1/2, so sigma < 0 is a shock and sigma > 0 a rarefaction.
"""

import math

import numpy as np

__all__ = [
    "DomainError",
    "ConsistencyError",
    "Model",
    "Isothermal",
    "Burgers",
    "TempleToy",
    "make_model",
    "flux",
    "eigenvalues",
    "rel_entropy",
    "rel_entropy_flux",
    "shock_curve",
    "rarefaction_curve",
    "rh_shock_speed",
]


class DomainError(ValueError):
    """State outside the admissible set (vacuum, loss of hyperbolicity)."""


class ConsistencyError(ValueError):
    """Pair of states that violates a jump relation it was asserted to satisfy."""


def _as_state(u):
    return np.asarray(u, dtype=float)


class Model:
    """Common interface.  Subclasses fill in the physics."""

    kind = "abstract"
    n_families = 0
    n_comp = 0

    def __init__(self, rho_min=1e-6):
        self.rho_min = float(rho_min)

    def __repr__(self):
        return f"{type(self).__name__}(rho_min={self.rho_min:g})"

    # -- validation ------------------------------------------------------
    def check(self, u):
        return _as_state(u)

    # -- coordinate views ------------------------------------------------
    def to_riemann(self, u):
        raise NotImplementedError

    def from_riemann(self, w):
        raise NotImplementedError

    # -- physics on conserved arrays --------------------------------------
    def flux(self, u):
        raise NotImplementedError

    def eigenvalues(self, u):
        raise NotImplementedError

    def entropy(self, u):
        raise NotImplementedError

    def entropy_flux(self, u):
        raise NotImplementedError

    def entropy_grad(self, u):
        raise NotImplementedError

    def rel_entropy(self, a, b):
        """eta(a|b) = eta(a) - eta(b) - grad eta(b).(a - b)."""
        a = self.check(a)
        b = self.check(b)
        return self.entropy(a) - self.entropy(b) - np.sum(self.entropy_grad(b) * (a - b), axis=-1)

    def rel_entropy_flux(self, a, b):
        """q(a;b) = q(a) - q(b) - grad eta(b).(f(a) - f(b))."""
        a = self.check(a)
        b = self.check(b)
        return (self.entropy_flux(a) - self.entropy_flux(b)
                - np.sum(self.entropy_grad(b) * (self.flux(a) - self.flux(b)), axis=-1))

    # -- Riemann-coordinate kernels (tuples of floats) ----------------------
    def char_speed(self, family, w):
        raise NotImplementedError

    def curve_defect(self, sigma):
        """Shock-curve defect phi(sigma) <= 0 for sigma < 0; zero otherwise."""
        return 0.0

    def curve_defect_deriv(self, sigma):
        return 0.0

    def advance(self, family, w, sigma, defect=0.0):
        """Move ``w`` along family ``family`` by strength ``sigma`` plus a common defect."""
        raise NotImplementedError

    def shock_speed_w(self, family, w_left, sigma):
        """Rankine-Hugoniot speed of the exact shock of strength sigma < 0 from w_left."""
        raise NotImplementedError

    def jump_strength(self, family, w_left, w_right):
        """Signed strength of a single-family jump (Riemann units)."""
        return w_right[family - 1] - w_left[family - 1]

    def riemann_ok(self, w):
        return True

    def validate_w(self, w):
        if not self.riemann_ok(w):
            raise DomainError(f"state {tuple(w)} outside the admissible set of {self.kind}")
        return w

    # -- exact wave curves on conserved arrays ------------------------------
    def shock_curve(self, family, base, sigma):
        if sigma > 0:
            raise ValueError("shock curve needs sigma <= 0")
        w = tuple(self.to_riemann(self.check(base)))
        out = self.advance(family, w, sigma, self.curve_defect(sigma))
        return self.from_riemann(self.validate_w(out))

    def rarefaction_curve(self, family, base, sigma):
        if sigma < 0:
            raise ValueError("rarefaction curve needs sigma >= 0")
        w = tuple(self.to_riemann(self.check(base)))
        out = self.advance(family, w, sigma)
        return self.from_riemann(self.validate_w(out))

    def wave_curve(self, family, base, sigma):
        if sigma < 0:
            return self.shock_curve(family, base, sigma)
        return self.rarefaction_curve(family, base, sigma)

    def rh_shock_speed(self, left, right, tol=1e-10):
        raise NotImplementedError

    def max_speed(self, w):
        return max(abs(self.char_speed(i, w)) for i in range(1, self.n_families + 1))

    def reflect(self, u):
        """State map of the reflection x -> -x: (w1, w2) -> (-w2, -w1) in Riemann coordinates.

        It sends i-waves to (n+1-i)-waves and keeps eta(.|.) invariant.
        """
        w = self.to_riemann(self.check(u))
        return self.from_riemann(-w[..., ::-1])


class Isothermal(Model):
    kind = "isothermal"
    n_families = 2
    n_comp = 2

    @staticmethod
    def state(rho, vel):
        rho = np.asarray(rho, dtype=float)
        vel = np.asarray(vel, dtype=float)
        return np.stack([rho, rho * vel], axis=-1)

    @staticmethod
    def primitive(u):
        u = _as_state(u)
        return u[..., 0], u[..., 1] / u[..., 0]

    def check(self, u):
        u = _as_state(u)
        if u.shape[-1] != 2:
            raise ValueError("isothermal states have two components (rho, m)")
        if np.any(~(u[..., 0] >= self.rho_min)):
            raise DomainError(f"density below rho_min={self.rho_min:g} (vacuum excluded)")
        return u

    def to_riemann(self, u):
        u = self.check(u)
        rho = u[..., 0]
        vel = u[..., 1] / rho
        lr = np.log(rho)
        return np.stack([vel - lr, vel + lr], axis=-1)

    def from_riemann(self, w):
        w = _as_state(w)
        vel = 0.5 * (w[..., 0] + w[..., 1])
        rho = np.exp(0.5 * (w[..., 1] - w[..., 0]))
        return np.stack([rho, rho * vel], axis=-1)

    def riemann_ok(self, w):
        return math.exp(0.5 * (w[1] - w[0])) >= self.rho_min

    def flux(self, u):
        u = self.check(u)
        rho, m = u[..., 0], u[..., 1]
        return np.stack([m, m * m / rho + rho], axis=-1)

    def eigenvalues(self, u):
        u = self.check(u)
        vel = u[..., 1] / u[..., 0]
        return np.stack([vel - 1.0, vel + 1.0], axis=-1)

    def entropy(self, u):
        u = self.check(u)
        rho, m = u[..., 0], u[..., 1]
        return 0.5 * m * m / rho + rho * np.log(rho)

    def entropy_flux(self, u):
        u = self.check(u)
        rho, m = u[..., 0], u[..., 1]
        vel = m / rho
        return 0.5 * m * vel * vel + m * np.log(rho) + m

    def entropy_grad(self, u):
        u = self.check(u)
        rho, m = u[..., 0], u[..., 1]
        vel = m / rho
        return np.stack([-0.5 * vel * vel + np.log(rho) + 1.0, vel], axis=-1)

    def entropy_hessian(self, u):
        u = self.check(u)
        rho, m = u[..., 0], u[..., 1]
        vel = m / rho
        h = np.empty(u.shape + (2,))
        h[..., 0, 0] = vel * vel / rho + 1.0 / rho
        h[..., 0, 1] = h[..., 1, 0] = -vel / rho
        h[..., 1, 1] = 1.0 / rho
        return h

    # Riemann-coordinate kernels
    def char_speed(self, family, w):
        vel = 0.5 * (w[0] + w[1])
        return vel - 1.0 if family == 1 else vel + 1.0

    def curve_defect(self, sigma):
        # v-jump across a shock is -2 sinh(|log ratio|/2); in Riemann units that
        # leaves the common defect 2 sinh(sigma/4) - sigma/2 (third order at 0)
        if sigma >= 0:
            return 0.0
        return 2.0 * math.sinh(0.25 * sigma) - 0.5 * sigma

    def curve_defect_deriv(self, sigma):
        if sigma >= 0:
            return 0.0
        return 0.5 * math.cosh(0.25 * sigma) - 0.5

    def advance(self, family, w, sigma, defect=0.0):
        if family == 1:
            return (w[0] + sigma + defect, w[1] + defect)
        return (w[0] + defect, w[1] + sigma + defect)

    def jump_strength(self, family, w_left, w_right):
        # strength is -/+ 2 log(rho_r/rho_l), i.e. the jump of w1 - w2 or w2 - w1
        dl = (w_right[1] - w_right[0]) - (w_left[1] - w_left[0])
        return -dl if family == 1 else dl

    def shock_speed_w(self, family, w_left, sigma):
        vel = 0.5 * (w_left[0] + w_left[1])
        if family == 1:
            return vel - math.exp(-0.25 * sigma)
        return vel + math.exp(0.25 * sigma)

    def rh_shock_speed(self, left, right, tol=1e-10):
        left = self.check(left)
        right = self.check(right)
        drho = right[0] - left[0]
        if drho == 0.0:
            raise ConsistencyError("equal densities: not a shock pair")
        fl, fr = self.flux(left), self.flux(right)
        speed = (fr[0] - fl[0]) / drho
        resid = speed * (right[1] - left[1]) - (fr[1] - fl[1])
        scale = max(1.0, abs(fr[1]), abs(fl[1]))
        if abs(resid) > tol * scale:
            raise ConsistencyError(f"states are not on a Hugoniot locus (residual {resid:.3e})")
        return float(speed)


class Burgers(Model):
    kind = "burgers"
    n_families = 1
    n_comp = 1

    def check(self, u):
        u = _as_state(u)
        if u.ndim == 0:
            u = u[None]
        return u

    def to_riemann(self, u):
        return self.check(u).copy()

    def from_riemann(self, w):
        return self.check(w).copy()

    def flux(self, u):
        return 0.5 * self.check(u) ** 2

    def eigenvalues(self, u):
        return self.check(u).copy()

    def entropy(self, u):
        return 0.5 * self.check(u)[..., 0] ** 2

    def entropy_flux(self, u):
        return self.check(u)[..., 0] ** 3 / 3.0

    def entropy_grad(self, u):
        return self.check(u).copy()

    def char_speed(self, family, w):
        return w[0]

    def advance(self, family, w, sigma, defect=0.0):
        return (w[0] + sigma,)

    def shock_speed_w(self, family, w_left, sigma):
        return w_left[0] + 0.5 * sigma

    def rh_shock_speed(self, left, right, tol=1e-10):
        left = self.check(left)
        right = self.check(right)
        if left[0] == right[0]:
            raise ConsistencyError("equal states: not a shock pair")
        return float(0.5 * (left[0] + right[0]))


class TempleToy(Model):
    """Two uncoupled Burgers fields, w1_t + (w1^2/2 - w1)_x = 0, w2_t + (w2^2/2 + w2)_x = 0.

    Shock and rarefaction curves coincide (zero defect), the structural
    property used for Temple-class systems.  Strict hyperbolicity needs
    w1 - w2 < 2.
    """

    kind = "temple-toy"
    n_families = 2
    n_comp = 2
    _offset = (-1.0, 1.0)

    def check(self, u):
        u = _as_state(u)
        if u.shape[-1] != 2:
            raise ValueError("temple-toy states have two components")
        if np.any(u[..., 0] - u[..., 1] >= 2.0):
            raise DomainError("temple-toy state violates strict hyperbolicity (w1 - w2 >= 2)")
        return u

    def to_riemann(self, u):
        return self.check(u).copy()

    def from_riemann(self, w):
        return _as_state(w).copy()

    def riemann_ok(self, w):
        return w[0] - w[1] < 2.0

    def flux(self, u):
        u = self.check(u)
        return 0.5 * u * u + np.array(self._offset) * u

    def eigenvalues(self, u):
        u = self.check(u)
        return u + np.array(self._offset)

    def entropy(self, u):
        u = self.check(u)
        return 0.5 * np.sum(u * u, axis=-1)

    def entropy_flux(self, u):
        u = self.check(u)
        return np.sum(u ** 3 / 3.0 + 0.5 * np.array(self._offset) * u * u, axis=-1)

    def entropy_grad(self, u):
        return self.check(u).copy()

    def char_speed(self, family, w):
        return w[family - 1] + self._offset[family - 1]

    def advance(self, family, w, sigma, defect=0.0):
        if family == 1:
            return (w[0] + sigma, w[1])
        return (w[0], w[1] + sigma)

    def jump_strength(self, family, w_left, w_right):
        return w_right[family - 1] - w_left[family - 1]

    def shock_speed_w(self, family, w_left, sigma):
        return w_left[family - 1] + 0.5 * sigma + self._offset[family - 1]

    def rh_shock_speed(self, left, right, tol=1e-10):
        left = self.check(left)
        right = self.check(right)
        d = right - left
        moving = np.flatnonzero(np.abs(d) > tol)
        if moving.size != 1:
            raise ConsistencyError("temple-toy shock pairs differ in exactly one coordinate")
        i = int(moving[0])
        return float(0.5 * (left[i] + right[i]) + self._offset[i])


_MODELS = {"isothermal": Isothermal, "burgers": Burgers, "temple-toy": TempleToy}


def make_model(kind, rho_min=1e-6):
    try:
        cls = _MODELS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(_MODELS)}") from None
    return cls(rho_min=rho_min)


# functional surface --------------------------------------------------------

def flux(model, s):
    return model.flux(s)


def eigenvalues(model, s):
    return model.eigenvalues(s)


def rel_entropy(model, a, b):
    return model.rel_entropy(a, b)


def rel_entropy_flux(model, a, b):
    return model.rel_entropy_flux(a, b)


def shock_curve(model, family, base, sigma):
    return model.shock_curve(family, base, sigma)


def rarefaction_curve(model, family, base, sigma):
    return model.rarefaction_curve(family, base, sigma)


def rh_shock_speed(model, left, right):
    return model.rh_shock_speed(left, right)
