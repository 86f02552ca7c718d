"""Billiard ball maps of the model domain and the coupled semiclassical scales.

In the model domain the billiard ball maps are pure translations in (y, t)
whose size depends only on the ratio τ/η.  They are the time ±4/3 maps of
the Hamiltonian flow of (-ζ₀)^{3/2}, where ζ₀ = -(τ² - η²)η^{-4/3}.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np
from scipy.integrate import solve_ivp

from .special_airy import _sign


class ScaleError(ValueError):
    """Raised when a parameter set violates the scaling invariants."""


@dataclass(frozen=True)
class ScaleParams:
    """The coupled parameters h, ε, a, λ, N, c₀ of one experiment.

    ``n_constant`` multiplies λh^ε in the validity bound N <= n_constant·λh^ε.
    ``enforce`` may be switched off for exploratory runs.
    """
    h: float
    eps: float
    Y: float = 1024.0
    C0: float = 1.0
    c0: float = 0.375
    M: float = 4.0
    n_constant: float = 1.0
    enforce: bool = True

    def __post_init__(self):
        if not 0 < self.h <= 1:
            raise ScaleError("h must lie in (0, 1]")
        if not 0 < self.eps < 0.25:
            raise ScaleError("ε must lie in (0, 1/4)")
        if not 0 < self.C0 <= 1:
            raise ScaleError("C₀ must lie in (0, 1]")
        if not 0 < self.c0 <= 0.375:
            raise ScaleError("c₀ must lie in (0, 3/8]")
        if self.Y <= 0 or self.M < 1:
            raise ScaleError("Y must be positive and M >= 1")
        if self.enforce:
            if self.a < self.M * self.h ** (2 / 3):
                raise ScaleError(f"a = {self.a:.3g} is below M·h^(2/3) (gallery regime)")
            if self.N > self.n_constant * self.lam * self.h ** self.eps * (1 + 1e-12):
                raise ScaleError("N exceeds the validity bound λh^ε")

    @property
    def a(self):
        return math.sqrt(self.C0) / 2 * math.sqrt(self.Y) * self.h ** ((1 - self.eps) / 2)

    @property
    def lam(self):
        return self.a ** 1.5 / self.h

    @property
    def N(self):
        # the product equals λh^ε exactly; the nudge absorbs rounding
        return int(math.floor(self.C0 * self.Y * self.a ** -0.5 / 4 * (1 + 1e-12)))

    @property
    def c(self):
        """Propagation speed (1+a)^{1/2} of the glancing wave."""
        return math.sqrt(1 + self.a)

    @property
    def period(self):
        """Time between consecutive reflections, 4a^{1/2}(1+a)^{1/2}."""
        return 4 * math.sqrt(self.a) * self.c

    def interval(self, n, c=None):
        """I_n(c) = 2a^{1/2}(1+a)^{1/2}·[2n-(1+c), 2n+(1+c)]."""
        c = self.c0 if c is None else c
        unit = 2 * math.sqrt(self.a) * self.c
        return unit * (2 * n - 1 - c), unit * (2 * n + 1 + c)

    @property
    def T(self):
        """Final time: the centre of I_N(c₀), which is where the general
        construction of T lands when the boundary is flat."""
        return 2 * math.sqrt(self.a) * self.c * 2 * self.N

    def with_h(self, h):
        return replace(self, h=h)


@dataclass(frozen=True)
class PhasePoint:
    y: float
    t: float
    eta: float
    tau: float

    def as_array(self):
        return np.array([self.y, self.t, self.eta, self.tau])

    def hyperbolic(self):
        return abs(self.tau) > abs(self.eta)


def zeta0(eta, tau):
    """ζ₀ = -(τ² - η²)η^{-4/3}."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise ValueError("η must be positive")
    out = -(np.asarray(tau, dtype=float) ** 2 - eta ** 2) * eta ** (-4 / 3)
    return out if out.ndim else float(out)


def _shifts(p):
    s = p.tau ** 2 / p.eta ** 2 - 1
    if s <= 0:
        raise ValueError("billiard maps act only where |τ| > |η|")
    r = math.sqrt(s)
    return 4 * r + 8 / 3 * r ** 3, -4 * r * p.tau / p.eta


def delta(sign, p: PhasePoint) -> PhasePoint:
    """One billiard step δ±: (y, t) shifted, (η, τ) unchanged."""
    s = _sign(sign)
    dy, dt = _shifts(p)
    return PhasePoint(p.y + s * dy, p.t + s * dt, p.eta, p.tau)


def delta_iter(sign, n, p: PhasePoint) -> PhasePoint:
    """Closed form of (δ±)^n."""
    if n < 0 or int(n) != n:
        raise ValueError("iteration count must be a non-negative integer")
    if n == 0:
        return p
    s = _sign(sign)
    dy, dt = _shifts(p)
    return PhasePoint(p.y + s * n * dy, p.t + s * n * dt, p.eta, p.tau)


def _flow_rhs(_, u):
    y, t, eta, tau = u
    s = tau * tau - eta * eta
    # f = (-ζ₀)^{3/2} = s^{3/2} η^{-2}
    df_deta = 1.5 * s ** 0.5 * (-2 * eta) / eta ** 2 - 2 * s ** 1.5 / eta ** 3
    df_dtau = 1.5 * s ** 0.5 * (2 * tau) / eta ** 2
    # position velocity is minus the momentum gradient in this convention
    return [-df_deta, -df_dtau, 0.0, 0.0]


def hamiltonian_flow_check(p: PhasePoint, s=4 / 3, rtol=1e-11, atol=1e-13) -> PhasePoint:
    """Integrate the Hamiltonian field of (-ζ₀)^{3/2} for flow time s.

    s = +4/3 reproduces δ⁺ and s = -4/3 reproduces δ⁻."""
    if not p.hyperbolic():
        raise ValueError("flow check requires |τ| > |η|")
    if s == 0:
        return p
    sol = solve_ivp(_flow_rhs, (0.0, s), p.as_array(), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    y, t, eta, tau = sol.y[:, -1]
    return PhasePoint(float(y), float(t), float(eta), float(tau))
