"""Airy function, rotated branches, zeros and the boundary symbols a±, b±.

Evaluation strategy for Ai(z):

* |z| <= 2: Maclaurin series (the Taylor recursion of y'' = z y at 0).
* |z| >= 9: asymptotic expansion, optimally truncated.  For
  |arg z| > 2π/3 the connection formula Ai(z) = -ω Ai(ωz) - ω² Ai(ω²z)
  moves both evaluations into |arg| <= 2π/3.
* 2 < |z| < 9: Taylor continuation of the Airy ODE along the ray through
  z.  Where Ai is recessive (|arg z| < π/3) we start on the outer circle
  from the asymptotic values and step inwards; elsewhere Ai is dominant
  and we start on the inner circle from the series and step outwards.
  Both directions are the numerically stable ones.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AI0 = 0.355028053887817239260063186004183176  # 3^(-2/3)/Gamma(2/3)
AIP0 = -0.258819403792806798405183560189203963  # -3^(-1/3)/Gamma(1/3)

R_SERIES = 2.0
R_ASYMPTOTIC = 9.0
Z_MAX = 1.0e4
_STEPS = 8
_TAYLOR_TERMS = 60
_EXP_LIMIT = 700.0
_OMEGA = np.exp(2j * np.pi / 3)
_SQRT_PI = np.sqrt(np.pi)


class AiryRangeError(OverflowError):
    """Raised when Ai(z) is not representable in double precision."""


@dataclass(frozen=True)
class AiryValue:
    z: np.ndarray | complex
    ai: np.ndarray | complex
    ai_prime: np.ndarray | complex
    err: np.ndarray | float


def _asymptotic_coefficients(kmax=80):
    u = np.empty(kmax + 1)
    v = np.empty(kmax + 1)
    u[0] = v[0] = 1.0
    for k in range(1, kmax + 1):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        v[k] = -u[k] * (6 * k + 1) / (6 * k - 1)
    return u, v


_U, _V = _asymptotic_coefficients()


def _optimal_sum(coef, x):
    """Sum Σ coef_k x^k with signs folded into x, truncated at the smallest term.

    Returns (sum, magnitude of the first omitted term)."""
    x = np.asarray(x, dtype=complex)
    total = np.zeros_like(x)
    term = np.ones_like(x)
    last = np.full(x.shape, np.inf)
    active = np.ones(x.shape, dtype=bool)
    err = np.zeros(x.shape)
    for k in range(len(coef)):
        t = coef[k] * term
        mag = np.abs(t)
        stop = active & (mag >= last)
        err[stop] = last[stop]
        active &= ~stop
        total = np.where(active, total + t, total)
        last = np.where(active, mag, last)
        small = active & (mag <= 1e-17 * np.abs(total))
        err[small] = mag[small]
        active &= ~small
        if not active.any():
            break
        term = term * x
    err[active] = last[active]
    return total, err


def _asymptotic_sector(z):
    """Ai and Ai' from the large-|z| expansion, valid for |arg z| <= 2π/3."""
    zeta = (2.0 / 3.0) * z ** 1.5
    if np.any(np.abs(zeta.real) > _EXP_LIMIT):
        raise AiryRangeError("Airy value outside the double-precision range")
    x = -1.0 / zeta
    su, eu = _optimal_sum(_U, x)
    sv, _ = _optimal_sum(_V, x)
    e = np.exp(-zeta)
    q = z ** 0.25
    ai = e * su / (2 * _SQRT_PI * q)
    aip = -q * e * sv / (2 * _SQRT_PI)
    err = np.abs(e / (2 * _SQRT_PI * q)) * (eu + 4e-16 * np.abs(su))
    return ai, aip, err


def _asymptotic(z):
    z = np.asarray(z, dtype=complex)
    ai = np.empty_like(z)
    aip = np.empty_like(z)
    err = np.empty(z.shape)
    far = np.abs(np.angle(z)) > 2 * np.pi / 3
    near = ~far
    if near.any():
        ai[near], aip[near], err[near] = _asymptotic_sector(z[near])
    if far.any():
        zf = z[far]
        a1, d1, e1 = _asymptotic_sector(_OMEGA * zf)
        a2, d2, e2 = _asymptotic_sector(_OMEGA.conjugate() * zf)
        w, w2 = _OMEGA, _OMEGA.conjugate()
        ai[far] = -w * a1 - w2 * a2
        aip[far] = -w2 * d1 - w * d2
        err[far] = e1 + e2
    return ai, aip, err


def _maclaurin(z):
    """Maclaurin series; coefficients from c_{k+3} = c_k / ((k+3)(k+2))."""
    z = np.asarray(z, dtype=complex)
    ai = np.zeros(z.shape, dtype=complex)
    aip = np.zeros(z.shape, dtype=complex)
    absum = np.zeros(z.shape)
    c = [AI0, AIP0, 0.0]
    coeffs = list(c)
    for k in range(3, 3 * 40):
        coeffs.append(coeffs[k - 3] / (k * (k - 1)))
    zp = np.ones(z.shape, dtype=complex)
    for k, ck in enumerate(coeffs):
        if k > 0:
            aip = aip + k * ck * zpm1
        t = ck * zp
        ai = ai + t
        absum = absum + np.abs(t)
        zpm1 = zp
        zp = zp * z
    return ai, aip, 2.3e-16 * absum


def _taylor_step(z0, y, yp, hs):
    """Advance (y, y') of y'' = z y from z0 to z0 + hs by a Taylor series."""
    h2 = hs * hs
    h3 = h2 * hs
    # d_k = c_k hs^k with (k+2)(k+1) c_{k+2} = z0 c_k + c_{k-1}
    seq = [y, yp * hs, z0 * h2 * y / 2.0]
    val = seq[0] + seq[1] + seq[2]
    der = seq[1] + 2 * seq[2]
    for k in range(1, _TAYLOR_TERMS):
        d = (z0 * h2 * seq[k] + h3 * seq[k - 1]) / ((k + 2) * (k + 1))
        seq.append(d)
        val = val + d
        der = der + (k + 2) * d
        if k > 6 and np.all(np.abs(d) + np.abs(seq[k + 1]) <= 1e-18 * np.abs(val)):
            break
    return val, der / hs


def _continuation(z):
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    unit = z / r
    inward = np.abs(np.angle(z)) < np.pi / 3
    start = np.where(inward, R_ASYMPTOTIC, R_SERIES) * unit
    ai = np.empty_like(z)
    aip = np.empty_like(z)
    err = np.empty(z.shape)
    if inward.any():
        ai[inward], aip[inward], err[inward] = _asymptotic(start[inward])
    if (~inward).any():
        ai[~inward], aip[~inward], err[~inward] = _maclaurin(start[~inward])
    hs = (z - start) / _STEPS
    cur = start
    for _ in range(_STEPS):
        ai, aip = _taylor_step(cur, ai, aip, hs)
        cur = cur + hs
    err = err + 1e-15 * np.abs(ai)
    return ai, aip, err


def _airy_pair(z):
    """Vectorised (Ai, Ai', err) for complex input."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    r = np.abs(z)
    if np.any(r > Z_MAX):
        raise ValueError("|z| must not exceed 1e4")
    ai = np.empty_like(z)
    aip = np.empty_like(z)
    err = np.empty(z.shape)
    m1 = r <= R_SERIES
    m3 = r >= R_ASYMPTOTIC
    m2 = ~(m1 | m3)
    if m1.any():
        ai[m1], aip[m1], err[m1] = _maclaurin(z[m1])
    if m2.any():
        ai[m2], aip[m2], err[m2] = _continuation(z[m2])
    if m3.any():
        ai[m3], aip[m3], err[m3] = _asymptotic(z[m3])
    return ai, aip, err


def airy_ai(z) -> AiryValue:
    """Ai(z) and Ai'(z); real input gives real output.  Scalars stay scalars."""
    zarr = np.asarray(z)
    real = not np.iscomplexobj(zarr)
    ai, aip, err = _airy_pair(zarr.ravel())
    ai = ai.reshape(zarr.shape)
    aip = aip.reshape(zarr.shape)
    err = err.reshape(zarr.shape)
    if real:
        ai, aip = ai.real, aip.real
    if zarr.ndim == 0:
        return AiryValue(z=zarr.item(), ai=ai.item(), ai_prime=aip.item(), err=float(err))
    return AiryValue(z=zarr, ai=ai, ai_prime=aip, err=err)


def ai(z):
    """Shorthand returning only Ai(z)."""
    return airy_ai(z).ai


# ---------------------------------------------------------------- zeros

def _zero_guess(k):
    t = 3 * np.pi * (4 * np.asarray(k, dtype=float) - 1) / 8
    return t ** (2 / 3) * (1 + 5 / 48 * t ** -2 - 5 / 36 * t ** -4 + 77125 / 82944 * t ** -6)


class AiryZeroError(RuntimeError):
    pass


def airy_zero(k):
    """Positive ω_k with Ai(-ω_k) = 0, k = 1, 2, ... (scalar or array)."""
    karr = np.atleast_1d(np.asarray(k))
    if np.any(karr < 1) or np.any(karr > 10_000) or np.any(karr != np.round(karr)):
        raise ValueError("zero index must be an integer in [1, 10^4]")
    g = _zero_guess(karr)
    half = 0.3 * np.pi / np.sqrt(g)
    lo, hi = g - half, g + half
    flo, fhi = ai(-lo), ai(-hi)
    if np.any(flo * fhi > 0):
        raise AiryZeroError("bracket does not enclose a zero")
    while np.any(hi - lo > 1e-6):
        mid = 0.5 * (lo + hi)
        fm = ai(-mid)
        left = flo * fm <= 0
        hi = np.where(left, mid, hi)
        fhi = np.where(left, fm, fhi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
    x = 0.5 * (lo + hi)
    for _ in range(20):
        v = airy_ai(-x)
        dx = v.ai / v.ai_prime
        x = x + dx
        if np.all(np.abs(dx) <= 4e-16 * x):
            break
    else:
        if np.any(np.abs(dx) > 1e-12 * x):
            raise AiryZeroError("Newton refinement did not converge")
    return x if np.ndim(k) else float(x[0])


# ---------------------------------------------------------------- branches

def airy_branch(sign, z):
    """A±(z) = -e^{∓2πi/3} Ai(e^{∓2πi/3} z), so that A⁺ + A⁻ = Ai."""
    s = _sign(sign)
    rot = np.exp(-s * 2j * np.pi / 3)
    return -rot * airy_ai(rot * np.asarray(z, dtype=complex)).ai


def _sign(sign):
    if sign in ("+", 1, +1.0):
        return 1
    if sign in ("-", "−", -1, -1.0):
        return -1
    raise ValueError(f"sign must be + or -, got {sign!r}")


# ---------------------------------------------------------------- symbols a±, b±

@dataclass(frozen=True)
class AirySymbolExpansion:
    """a±(w, ηλ) ≈ Σ_j coefficients[j] (ηλ)^{-j}."""
    branch: int
    w: np.ndarray | float
    coefficients: list
    order: int
    large_parameter: float

    def evaluate(self):
        lam = self.large_parameter
        return sum(c * lam ** (-j) for j, c in enumerate(self.coefficients))

    def exact(self):
        return symbol_a(self.branch, self.w, self.large_parameter)


def symbol_coefficient(sign, j, w):
    """j-th coefficient of a±(w, ηλ) in powers of (ηλ)^{-1}."""
    s = _sign(sign)
    w = np.asarray(w, dtype=float)
    g = (2.0 / 3.0) * (1 - w) ** 1.5
    # a+ = e^{iπ/4}(1-w)^{-1/4} Σ (-1)^j u_j (i g ηλ)^{-j}; a- is its conjugate
    c = np.exp(1j * np.pi / 4) * (1 - w) ** -0.25 * (-1) ** j * _U[j] * (1j * g) ** (-j)
    return c if s > 0 else np.conj(c)


def airy_symbol(sign, w, eta_lambda, order=3) -> AirySymbolExpansion:
    s = _sign(sign)
    if eta_lambda < 10:
        raise ValueError("ηλ below the validity threshold 10")
    if np.any(np.abs(np.asarray(w)) > 0.5):
        raise ValueError("|w| must not exceed 1/2")
    coeffs = [symbol_coefficient(s, j, w) for j in range(order + 1)]
    return AirySymbolExpansion(s, w, coeffs, order, float(eta_lambda))


def symbol_a(sign, w, eta_lambda):
    """a±(w, ηλ) = 2√π (ηλ)^{1/6} e^{±(2/3)iηλ(1-w)^{3/2}} A±(-(ηλ)^{2/3}(1-w)).

    Normalised so that |a±| -> 1 as ηλ -> ∞; evaluated without forming the
    oscillatory factor whenever the argument is in the asymptotic range."""
    s = _sign(sign)
    w = np.asarray(w, dtype=float)
    lam = float(eta_lambda)
    r = lam ** (2 / 3) * (1 - w)
    out = np.empty(w.shape, dtype=complex)
    far = r >= R_ASYMPTOTIC
    if far.any():
        g = (2.0 / 3.0) * lam * (1 - w[far]) ** 1.5
        total, _ = _optimal_sum(_U, -1.0 / (1j * g))
        val = np.exp(1j * np.pi / 4) * (1 - w[far]) ** -0.25 * total
        out[far] = val if s > 0 else np.conj(val)
    near = ~far
    if near.any():
        wn = w[near]
        phase = np.exp(s * 2j / 3 * lam * (1 - wn + 0j) ** 1.5)
        out[near] = 2 * _SQRT_PI * lam ** (1 / 6) * phase * airy_branch(s, -r[near])
    return out if out.ndim else complex(out)


def symbol_b(sign, w, eta_lambda, kappa):
    """b±(w, ηλ) = κ(w)/a±(w, ηλ); zero where κ vanishes."""
    a = np.asarray(symbol_a(sign, w, eta_lambda))
    k = np.asarray(kappa(w), dtype=float)
    return np.where(k != 0, k / np.where(k != 0, a, 1), 0)
