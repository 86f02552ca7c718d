"""Taylor-series solutions (θ, ζ) of the eikonal system for the metric
ξ² + (1 + x b(y))η² - τ² on the half-plane x > 0.

With <·,·> the dual quadratic form, the system is

    <dθ, dθ> - ζ<dζ, dζ> = 0,    <dθ, dζ> = 0,

and θ = θ₀(y) + tτ + Σ_{j>=1} θ_j(y)x^j/j!, ζ = ζ₀ + Σ_{j>=1} ζ_j(y)x^j/j!
with ζ₀ = -(τ² - η²)η^{-4/3}.  At order x^m the second equation fixes
θ_{m+1} and the first fixes ζ_m; the only upward coupling is a ζ₀ζ_{m+1}
term, which is evaluated on the glancing jet (ζ₀ = 0), so coefficients are
correct to first order in ζ₀.  Functions of y live on Chebyshev nodes of
the working window and are differentiated spectrally.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import brentq

MAX_ORDER = 6
BLOWUP = 1e6
ZETA0_RADIUS = 0.1


class JetError(ValueError):
    pass


def friedlander_phase(x, y, t, eta, tau):
    """(θ_F, ζ_F) = (yη + tτ, (x - (τ² - η²)/η²)η^{2/3})."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise ValueError("η must be positive")
    theta = np.asarray(y) * eta + np.asarray(t) * tau
    zeta = (np.asarray(x) - (np.asarray(tau) ** 2 - eta ** 2) / eta ** 2) * eta ** (2 / 3)
    return theta, zeta


def zeta0(eta, tau):
    return -(tau ** 2 - eta ** 2) * eta ** (-4 / 3)


def _curvature(b):
    if b is None:
        return lambda y: np.ones_like(np.asarray(y, dtype=float))
    if callable(b):
        return lambda y: np.asarray(b(np.asarray(y, dtype=float)), dtype=float) * np.ones_like(
            np.asarray(y, dtype=float))
    c = float(b)
    return lambda y: np.full_like(np.asarray(y, dtype=float), c)


def _solve_zeta1(bv, tau, z0, z2):
    """Root of Z³ = b(τ² + ζ₀Z²) - 4ζ₀Z·Z₂ near (bτ²)^{1/3} (Taylor-normalized Z₂)."""
    if abs(z0) > ZETA0_RADIUS:
        raise JetError(f"|ζ₀| = {abs(z0):.3g} exceeds the validity radius {ZETA0_RADIUS}")
    z = np.cbrt(bv * tau ** 2)
    for _ in range(50):
        f = z ** 3 - bv * (tau ** 2 + z0 * z * z) + 4 * z0 * z * z2
        fp = 3 * z * z - 2 * bv * z0 * z + 4 * z0 * z2
        dz = f / fp
        z = z - dz
        if np.all(np.abs(dz) <= 1e-15 * np.abs(z)):
            break
    else:
        raise JetError("ζ₁ iteration did not converge")
    if np.any(z <= 0):
        raise JetError("ζ₁ must be positive")
    return z


# ---------------------------------------------------------------- series algebra

def _cauchy(a, b, m):
    """Coefficient of x^m in (Σa_i x^i)(Σb_i x^i); missing entries are zero."""
    out = 0.0
    for i in range(m + 1):
        if i < len(a) and m - i < len(b) and a[i] is not None and b[m - i] is not None:
            out = out + a[i] * b[m - i]
    return out


class _Window:
    """Chebyshev nodes on [lo, hi]; y derivatives are taken on the
    coefficients after dropping those below roundoff, so that exact
    polynomial data (b ≡ 1 in particular) stays exact."""

    CHOP = 1e-14

    def __init__(self, lo, hi, n):
        self.lo, self.hi, self.n = float(lo), float(hi), int(n)
        s = np.cos(np.pi * np.arange(n) / (n - 1))[::-1]
        self.s = s
        self.y = lo + (hi - lo) * (s + 1) / 2
        self._Vinv = np.linalg.inv(C.chebvander(s, n - 1))

    def coefficients(self, values):
        c = self._Vinv @ values
        scale = max(float(np.max(np.abs(values))), 1e-300)
        c[np.abs(c) < self.CHOP * scale] = 0.0
        return c

    def derivative(self, values):
        return C.chebval(self.s, C.chebder(self.coefficients(values))) * (2 / (self.hi - self.lo))

    def evaluate(self, coef, y):
        s = (2 * np.asarray(y) - self.lo - self.hi) / (self.hi - self.lo)
        return C.chebval(s, coef)


def _residuals(T, Ty0, Z, win, bv, tau, m):
    """Coefficients of x^m in both eikonal equations (Taylor-normalized)."""
    Ty = [Ty0] + [win.derivative(t) for t in T[1:]]
    Zy = [np.zeros_like(Ty0)] + [win.derivative(z) for z in Z[1:]]
    tx = [(i + 1) * T[i + 1] for i in range(len(T) - 1)]
    zx = [(i + 1) * Z[i + 1] for i in range(len(Z) - 1)]

    def metric(ax, ay, bx, by, k):
        out = _cauchy(ax, bx, k) + _cauchy(ay, by, k)
        if k >= 1:
            out = out + bv * _cauchy(ay, by, k - 1)
        return out

    e2 = metric(tx, Ty, zx, Zy, m)
    F = [metric(zx, Zy, zx, Zy, k) for k in range(m + 1)]
    e1 = metric(tx, Ty, tx, Ty, m) - _cauchy(Z, F, m)
    if m == 0:
        e1 = e1 - tau ** 2
    return e1, e2


def _build(win, bv, J, eta, tau, z0, ref=None):
    """Taylor-normalized coefficients T[0..J], Z[0..J] (T[0] unused) and θ₀'."""
    n = win.n
    zero = np.zeros(n)
    Z = [np.full(n, z0), None]
    T = [zero, zero.copy()]
    z2 = ref[1][2] if ref is not None else zero
    Z[1] = _solve_zeta1(bv, tau, z0, z2)
    Ty0 = np.sqrt(tau ** 2 + z0 * Z[1] ** 2)
    # θ₁ from the order-0 orthogonality equation (it vanishes)
    _, e2 = _residuals(T, Ty0, Z + [zero], win, bv, tau, 0)
    T[1] = -e2 / Z[1]
    for m in range(2, J + 1):
        T.append(zero.copy())
        Z.append(zero.copy())
        _, e2 = _residuals(T, Ty0, Z, win, bv, tau, m - 1)
        T[m] = -e2 / (m * Z[1])
        up = ref[1][m + 1] if ref is not None and z0 != 0 else zero
        trial = Z + [up]
        # E1 at order m is affine in Z_m up to an O(ζ₀) quadratic: secant steps
        x0, x1 = zero.copy(), np.ones(n)
        trial[m] = x0
        f0, _ = _residuals(T, Ty0, trial, win, bv, tau, m)
        for _ in range(6):
            trial[m] = x1
            f1, _ = _residuals(T, Ty0, trial, win, bv, tau, m)
            denom = np.where(f1 == f0, 1.0, f1 - f0)
            x2 = np.where(f1 == f0, x1, x1 - f1 * (x1 - x0) / denom)
            if np.all(np.abs(x2 - x1) <= 1e-15 * (1 + np.abs(x2))):
                x1 = x2
                break
            x0, f0, x1 = x1, f1, x2
        Z[m] = x1
        if max(np.max(np.abs(T[m])), np.max(np.abs(Z[m]))) * factorial(m) > BLOWUP:
            raise JetError(f"jet coefficient at order {m} exceeds {BLOWUP:g}; shrink the window")
    return T, Z, Ty0


@dataclass
class PhaseJet:
    """Eikonal jet at fixed (η, τ) on the window [y_lo, y_hi].

    theta_j[j] and zeta_j[j] hold Chebyshev coefficients of θ_j and ζ_j
    (index 0 of theta_j holds ∂_yθ₀).  θ₀(y₀) = 0 at the normalization
    point y₀ where b(y₀) = 1."""
    order: int
    eta: float
    tau: float
    zeta0: float
    y_lo: float
    y_hi: float
    y0: float
    theta_j: list
    zeta_j: list
    theta0_coef: np.ndarray
    b: object
    _win: _Window

    def _eval(self, coef, y):
        y = np.asarray(y)
        yr = np.real(y)
        if np.any(yr < self.y_lo - 1e-12) or np.any(yr > self.y_hi + 1e-12):
            raise JetError("y outside the jet window")
        return self._win.evaluate(coef, y)

    def theta_coefficient(self, j, y):
        return self._eval(self.theta_j[j], y)

    def zeta_coefficient(self, j, y):
        if j == 0:
            return np.full_like(np.asarray(y, dtype=float), self.zeta0)
        return self._eval(self.zeta_j[j], y)

    def dtheta0(self, y):
        return self._eval(self.theta_j[0], y)

    def theta0(self, y):
        return self._eval(self.theta0_coef, y)

    def theta(self, x, y, t=0.0):
        x = np.asarray(x)
        out = self.theta0(y) + np.asarray(t) * self.tau
        for j in range(1, self.order + 1):
            out = out + x ** j / factorial(j) * self._eval(self.theta_j[j], y)
        return out

    def zeta(self, x, y):
        x = np.asarray(x)
        out = self.zeta0 + 0 * x
        for j in range(1, self.order + 1):
            out = out + x ** j / factorial(j) * self._eval(self.zeta_j[j], y)
        return out

    def to_csv(self, path, y):
        y = np.asarray(y, dtype=float)
        cols = {"y": y, "theta0": self.theta0(y), "dtheta0": self.dtheta0(y)}
        for j in range(1, self.order + 1):
            cols[f"theta{j}"] = self.theta_coefficient(j, y)
            cols[f"zeta{j}"] = self.zeta_coefficient(j, y)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(cols))
            for row in zip(*cols.values()):
                w.writerow([repr(float(v)) for v in row])


def jet_recursion(b, J, eta, tau, window=(-1.0, 1.0), y0=0.0, nodes=32) -> PhaseJet:
    """Build the eikonal jet of order J at (η, τ) on the y window."""
    if not 1 <= J <= MAX_ORDER:
        raise JetError(f"order must lie in [1, {MAX_ORDER}]")
    if eta <= 0:
        raise ValueError("η must be positive")
    lo, hi = window
    if not lo <= y0 <= hi:
        raise JetError("normalization point outside the window")
    bf = _curvature(b)
    win = _Window(lo, hi, nodes)
    bv = bf(win.y)
    if np.any(np.abs(np.cbrt(bv) - 1) > 0.1 + 1e-12):
        raise JetError("|b^{1/3} - 1| exceeds 1/10 on the window")
    if abs(float(bf(np.array([y0]))[0]) - 1) > 1e-12:
        raise JetError("b must equal 1 at the normalization point")
    z0 = zeta0(eta, tau)
    ref = None
    if z0 != 0:
        T, Z, _ = _build(win, bv, J + 1, eta, -eta, 0.0)
        ref = (T, Z)
    T, Z, Ty0 = _build(win, bv, J, eta, tau, z0, ref)
    theta = [win.coefficients(Ty0)] + [win.coefficients(factorial(j) * T[j]) for j in range(1, J + 1)]
    zeta = [None] + [win.coefficients(factorial(j) * Z[j]) for j in range(1, J + 1)]
    # θ₀ = ∫_{y₀} ∂_yθ₀, integrated in the Chebyshev variable
    s0 = (2 * y0 - lo - hi) / (hi - lo)
    th0 = C.chebint(theta[0], lbnd=s0) * (hi - lo) / 2
    return PhaseJet(J, float(eta), float(tau), float(z0), float(lo), float(hi), float(y0),
                    theta, zeta, th0, bf, win)


def zeta1(y, eta, tau, b=None, window=None):
    """ζ₁(y, η, τ), to first order in ζ₀, from the cubic
    ζ₁³ = bτ² + ζ₀(bζ₁² - 2ζ₁ζ₂) with ζ₂ taken from the glancing jet."""
    y = np.asarray(y, dtype=float)
    bf = _curvature(b)
    bv = bf(y)
    if np.any(np.abs(np.cbrt(bv) - 1) > 0.1 + 1e-12):
        raise JetError("|b^{1/3} - 1| exceeds 1/10")
    z0 = zeta0(eta, tau)
    if z0 == 0:
        return np.cbrt(bv) * eta ** (2 / 3)
    lo, hi = window if window is not None else (float(y.min()) - 0.5, float(y.max()) + 0.5)
    win = _Window(lo, hi, 32)
    _, Z, _ = _build(win, bf(win.y), 2, eta, -eta, 0.0)
    z2 = win.evaluate(win.coefficients(Z[2]), y)
    return _solve_zeta1(bv, tau, z0, z2)


def _gauss_cells(nodes):
    g, w = np.polynomial.legendre.leggauss(nodes)
    return g, w


def theta0(y_grid, eta, tau, b=None, y0=0.0, t=0.0, nodes=16):
    """θ₀(y) + tτ and ∂_yθ₀(y) on y_grid, with ∂_yθ₀ = +√(τ² + ζ₀ζ₁²) and θ₀(y₀) = 0.

    θ₀ is integrated with composite Gauss-Legendre, one cell per gap of
    the (sorted) grid."""
    y_grid = np.asarray(y_grid, dtype=float)
    lo = min(float(y_grid.min()), y0)
    hi = max(float(y_grid.max()), y0)
    z0 = zeta0(eta, tau)

    def slope(y):
        z1 = zeta1(y, eta, tau, b, window=(lo - 0.5, hi + 0.5))
        rad = tau ** 2 + z0 * z1 ** 2
        if np.any(rad <= 0):
            raise JetError("radicand τ² + ζ₀ζ₁² is not positive")
        return np.sqrt(rad)

    pts = np.union1d(y_grid, [y0])
    g, w = _gauss_cells(nodes)
    a, c = pts[:-1], pts[1:]
    yq = (a[:, None] + c[:, None]) / 2 + (c - a)[:, None] / 2 * g[None, :]
    cell = (slope(yq.ravel()).reshape(yq.shape) @ w) * (c - a) / 2
    cum = np.concatenate([[0.0], np.cumsum(cell)])
    cum -= cum[np.searchsorted(pts, y0)]
    vals = np.interp(y_grid, pts, cum) + t * tau
    return vals, slope(y_grid)


def caustic(y, eta, tau, jet: PhaseJet):
    """x = C(y, η, τ) solving ζ(x, y) = 0 on the illuminated side."""
    z0 = zeta0(eta, tau)
    if z0 >= 0:
        raise JetError("caustic requires ζ₀ < 0")
    if abs(jet.eta - eta) > 1e-15 or abs(jet.tau - tau) > 1e-15:
        raise JetError("jet was built for another (η, τ)")
    out = []
    for yy in np.atleast_1d(y):
        z1 = float(jet.zeta_coefficient(1, yy))
        xmax = 4 * abs(z0) / z1 + 1e-12
        f = lambda x: float(jet.zeta(x, yy))
        if f(0.0) * f(xmax) > 0:
            raise JetError("ζ does not change sign on the bracket")
        out.append(brentq(f, 0.0, xmax, xtol=1e-16, rtol=1e-15))
    return np.array(out) if np.ndim(y) else out[0]
