"""Model cusp solutions uⁿ, their boundary traces, the sum U, and
localization and residual diagnostics.

With ξ = a^{1/2}v, Λ = ηλ, Z = t/(2ca^{1/2}) - 2n and y' = y - ct + (4/3)na^{3/2}

    uⁿ(x, y, t) = ∫ dη Ψ(η) e^{iηy'/h} 2π(h/η)^{1/3} G(x/a, Z; η)
    G(X, Z; η)  = (Λ^{1/3}/2π) ∫ ρⁿ(z; η) e^{iΛ(v³/3 - v(1-X))} dz,  v = z - Z.

The z integral is a trapezoid sum on the profile grid (spectrally accurate
for the smooth, compactly concentrated integrand); on a uniform X grid it
is a chirp-z transform.  The η integral is a trapezoid sum on supp Ψ with
spacing 2πh/P, which makes the field P-periodic in y; P is chosen so that
one period holds the field and the decay tail of the Ψ transform.
Fields are returned as envelopes: the physical field is
values·e^{i(y - ct)/h}.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
import math

import numpy as np
from scipy import fft as sfft

from .billiard_maps import ScaleParams
from .model_spectrum import Field2D, make_field, periodic_grid, trapezoid_weights
from .symbol_calculus import (DEFAULT_SETTINGS, SampledProfile, SymbolSettings, bump,
                              _multipliers, make_seed, op_I, reflect_n)

# allowance for the decay of the Ψ transform, in units of h/w_Ψ
BLUR = 120.0


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class CuspSpec:
    """One cusp uⁿ: reflection index, scales, frequency window and seed."""
    n: int
    scale: ScaleParams
    psi_halfwidth: float = 1 / 16
    settings: SymbolSettings = DEFAULT_SETTINGS
    seed_mode: str = "transport"
    blur: float = BLUR

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError("n must be a non-negative integer")
        if self.scale.enforce and self.n > self.scale.N:
            raise ValueError(f"n = {self.n} exceeds N = {self.scale.N}")
        if not 0 < self.psi_halfwidth <= 0.125:
            raise ValueError("Ψ half-width must lie in (0, 1/8]")
        if self.seed_mode not in ("transport", "frozen"):
            raise ValueError("seed_mode must be 'transport' or 'frozen'")

    @property
    def h(self):
        return self.scale.h

    @property
    def a(self):
        return self.scale.a

    @property
    def lam(self):
        return self.scale.lam

    @property
    def c(self):
        return self.scale.c

    @property
    def unit(self):
        """2ca^{1/2}: time per unit of the profile variable."""
        return 2 * self.c * math.sqrt(self.a)

    def Z(self, t):
        return t / self.unit - 2 * self.n

    def time(self, Z):
        return (Z + 2 * self.n) * self.unit

    @property
    def shift(self):
        """(4/3)na^{3/2}: tangential shift after n reflections."""
        return 4 / 3 * self.n * self.a ** 1.5

    def with_n(self, n):
        return replace(self, n=n)


def psi(eta, halfwidth=1 / 16):
    return bump((np.asarray(eta, dtype=float) - 1) / halfwidth)


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class _Trimmed:
    """Profile values on the index range [i0, i0 + len(values)) of a grid
    with m points per unit centred on z = 0."""
    m: int
    i0: int
    values: np.ndarray
    deriv: np.ndarray

    @property
    def z(self):
        return (self.i0 + np.arange(len(self.values))) / self.m


def _trim(prof: SampledProfile, rel=1e-13):
    v = prof.values
    d = prof.derivative()
    keep = np.nonzero(np.abs(v) > rel * np.max(np.abs(v)))[0]
    lo, hi = keep[0], keep[-1] + 1
    return _Trimmed(prof.m, lo - prof.n // 2, v[lo:hi].copy(), d[lo:hi].copy())


@lru_cache(maxsize=8)
def _seed(c0, lam, settings):
    return make_seed(c0, lam, settings)


@lru_cache(maxsize=512)
def _profile(spec_key, eta):
    n, scale, settings = spec_key
    seed = _seed(scale.c0, scale.lam, settings)
    if n == 0:
        return _trim(seed)
    return _trim(reflect_n(seed, eta, n, scale if scale.enforce else None, settings, method="power"))


@lru_cache(maxsize=64)
def _trace_profile(spec_key, eta, sign):
    n, scale, settings = spec_key
    seed = _seed(scale.c0, scale.lam, settings)
    rho = seed if n == 0 else reflect_n(seed, eta, n, scale if scale.enforce else None,
                                        settings, method="power")
    return op_I(sign, rho, eta, settings)


def clear_caches():
    """Drop cached seeds and reflected profiles; long sweeps over many
    scales can otherwise hold several GB."""
    _seed.cache_clear()
    _profile.cache_clear()
    _trace_profile.cache_clear()
    _multipliers.cache_clear()


def _key(spec):
    return (spec.n, spec.scale, spec.settings)


def cusp_profile(spec: CuspSpec, eta) -> SampledProfile:
    """ρⁿ(·; η) on its grid."""
    seed = _seed(spec.scale.c0, spec.lam, spec.settings)
    if spec.n == 0:
        return seed
    return reflect_n(seed, eta, spec.n, spec.scale if spec.scale.enforce else None,
                     spec.settings, method="power")


# ---------------------------------------------------------------- η quadrature

@dataclass(frozen=True)
class EtaNodes:
    eta: np.ndarray
    k: np.ndarray
    deta: float
    period: float

    def weights(self, halfwidth):
        return self.deta * psi(self.eta, halfwidth)


def eta_nodes(spec: CuspSpec, period) -> EtaNodes:
    """η_k = 1 + k dη with dη = 2πh/P, interior to supp Ψ."""
    deta = 2 * np.pi * spec.h / period
    kmax = int(math.ceil(spec.psi_halfwidth / deta)) - 1
    k = np.arange(-kmax, kmax + 1)
    return EtaNodes(1 + k * deta, k, deta, period)


def _coarsen(nodes: EtaNodes) -> EtaNodes:
    keep = nodes.k % 2 == 0
    return EtaNodes(nodes.eta[keep], nodes.k[keep] // 2, 2 * nodes.deta, nodes.period / 2)


def blur_width(spec: CuspSpec):
    return spec.blur * spec.h / spec.psi_halfwidth


def support_in_s(spec: CuspSpec, Z):
    """Interval in s = y - ct holding uⁿ at profile time Z (before blur)."""
    prof = _profile(_key(spec), 1.0)
    z = prof.z
    v = np.clip(np.array([z[0] - Z, z[-1] - Z]), -1.05, 1.05)
    yp = 2 / 3 * spec.a ** 1.5 * v ** 3
    lo, hi = float(yp.min()), float(yp.max())
    pad = 0.05 * (hi - lo) + 20 * spec.h
    return lo - pad - spec.shift, hi + pad - spec.shift


def default_period(spec: CuspSpec, s_lo, s_hi):
    """Period holding [s_lo, s_hi] plus the blur on both sides, doubled so
    that the η-halved estimate is still alias free."""
    return 2 * ((s_hi - s_lo) + 2 * blur_width(spec))


# ---------------------------------------------------------------- x coefficients

def _uniform(X):
    X = np.asarray(X, dtype=float)
    if len(X) < 3:
        return False
    d = np.diff(X)
    return np.allclose(d, d[0], rtol=1e-9, atol=0)


def _chirp_sum(x, m, theta):
    """X_k = Σ_n x_n e^{iθnk} for k < m (Bluestein, nk = (n² + k² - (k-n)²)/2)."""
    n = len(x)
    nfft = sfft.next_fast_len(n + m - 1)
    jn = np.arange(n, dtype=float)
    jm = np.arange(m, dtype=float)
    a = x * np.exp(0.5j * theta * jn * jn)
    j = np.arange(-(n - 1), m, dtype=float)
    c = np.exp(-0.5j * theta * j * j)
    conv = sfft.ifft(sfft.fft(a, nfft) * sfft.fft(c, nfft))
    return np.exp(0.5j * theta * jm * jm) * conv[n - 1:n - 1 + m]


def _uniform_runs(X):
    """Split indices of X into maximal runs of constant spacing."""
    if len(X) < 3:
        return [(0, len(X))]
    d = np.diff(X)
    brk = np.nonzero(~np.isclose(d[1:], d[:-1], rtol=1e-9, atol=0))[0] + 1
    edges = [0] + list(brk + 1) + [len(X)]
    runs, start = [], 0
    for e in edges[1:]:
        runs.append((start, e))
        start = e
    return runs


def _g_integral(vals, v, L, X):
    """Σ_m vals_m e^{iL(v_m³/3 - v_m(1-X))} for every X.

    Each run of uniformly spaced X is a chirp-z sum; isolated points are
    summed directly."""
    base = vals * np.exp(1j * L * (v ** 3 / 3 - v))
    X = np.asarray(X, dtype=float)
    out = np.empty(len(X), dtype=complex)
    dv = v[1] - v[0]
    for i0, i1 in _uniform_runs(X):
        Xr = X[i0:i1]
        if len(Xr) >= 3:
            dX = Xr[1] - Xr[0]
            pre = base * np.exp(1j * L * v * Xr[0])
            out[i0:i1] = _chirp_sum(pre, len(Xr), L * dv * dX) * \
                np.exp(1j * L * v[0] * dX * np.arange(len(Xr)))
        else:
            out[i0:i1] = np.exp(1j * L * np.outer(Xr, v)) @ base
    return out


def x_coefficients(spec: CuspSpec, X, Z, nodes: EtaNodes, deriv=None, zstride=1):
    """C[:, j] = Ψ(η_j)dη·2π(h/η_j)^{1/3}·G(X, Z; η_j), times e^{iη_j(4/3)nλ}.

    deriv="t" gives the same for ∂ₜ of the envelope-free field, i.e. it
    includes the -iη c/h carrier term.  zstride > 1 coarsens the z sum."""
    X = np.asarray(X, dtype=float)
    w = nodes.weights(spec.psi_halfwidth)
    out = np.zeros((len(X), len(nodes.eta)), dtype=complex)
    key = _key(spec)
    for j, eta in enumerate(nodes.eta):
        if w[j] == 0:
            continue
        L = eta * spec.lam
        pre = w[j] * 2 * np.pi * (spec.h / eta) ** (1 / 3) * np.exp(1j * eta * spec.shift / spec.h)
        if spec.seed_mode == "frozen":
            g, gz = _frozen(spec, Z, L, X)
        else:
            prof = _profile(key, float(eta) if spec.n else 1.0)
            sl = slice(None, None, zstride)
            v = prof.z[sl] - Z
            dz = zstride / prof.m
            c = L ** (1 / 3) / (2 * np.pi) * dz
            g = c * _g_integral(prof.values[sl], v, L, X)
            gz = c * _g_integral(prof.deriv[sl], v, L, X) if deriv == "t" else None
        if deriv == "t":
            out[:, j] = pre * (-1j * eta * spec.c / spec.h * g + gz / spec.unit)
        else:
            out[:, j] = pre * g
    return out


def _frozen(spec, Z, L, X):
    """Seed frozen in t: G = ρ(Z)Ai(-Λ^{2/3}(1-X))."""
    from .special_airy import ai
    seed = _seed(spec.scale.c0, spec.lam, spec.settings)
    z = seed.z
    r = np.interp(Z, z, seed.values.real)
    rz = np.interp(Z, z, seed.derivative().real)
    A = ai(-(L ** (2 / 3)) * (1 - np.asarray(X)))
    return r * A, rz * A


# ---------------------------------------------------------------- y synthesis

def synthesize_y(C, nodes: EtaNodes, s, h):
    """Envelope Σ_j C_j e^{i(η_j-1)s/h} on the s grid.

    A uniform grid covering exactly one period uses the FFT; anything else
    is summed directly."""
    s = np.asarray(s, dtype=float)
    ny = len(s)
    ds = s[1] - s[0] if ny > 1 else 0.0
    if ny > 1 and abs(ds * ny - nodes.period) < 1e-9 * nodes.period and _uniform(s) \
            and ny > 2 * np.max(np.abs(nodes.k)):
        spec = np.zeros((C.shape[0], ny), dtype=complex)
        ph = np.exp(1j * nodes.k * nodes.deta * s[0] / h)
        np.add.at(spec, (slice(None), nodes.k % ny), C * ph[None, :])
        return sfft.ifft(spec, axis=1) * ny
    E = np.exp(1j * np.outer(nodes.k * nodes.deta, s) / h)
    return C @ E


# ---------------------------------------------------------------- evaluation

def default_x(spec: CuspSpec, Z, points_per_wave=16):
    """Uniform x grid covering where uⁿ(·, t) is not negligible."""
    prof = _profile(_key(spec), 1.0)
    vmax = min(max(abs(prof.z[0] - Z), abs(prof.z[-1] - Z)), 1.0)
    vmin = 0.0 if (prof.z[0] - Z) * (prof.z[-1] - Z) < 0 else \
        min(abs(prof.z[0] - Z), abs(prof.z[-1] - Z), 1.0)
    lam = spec.lam
    Xlo = max(0.0, 1 - vmax ** 2 - 0.02 - 4 * lam ** (-2 / 3))
    Xhi = 1 + 8 * lam ** (-2 / 3)
    # the local wavenumber in X is Λ(1-X)^{1/2}
    k = 1.07 * lam * math.sqrt(max(1 - Xlo, 0.0)) + lam ** (2 / 3)
    dX = min(lam ** (-2 / 3) / 24, 2 * np.pi / k / points_per_wave)
    nX = int(math.ceil((Xhi - Xlo) / dX)) + 1
    return spec.a * (Xlo + dX * np.arange(nX))


def default_s(spec: CuspSpec, Z, nodes: EtaNodes, r_max=64):
    s_lo, s_hi = support_in_s(spec, Z)
    ny = sfft.next_fast_len(max(64, (r_max // 2 + 1) * len(nodes.eta)))
    return periodic_grid(0.5 * (s_lo + s_hi), nodes.period, ny)


def eval_cusp(spec: CuspSpec, x=None, y=None, t=0.0, deriv=None, error=False,
              period=None, r_max=64) -> Field2D:
    """uⁿ (or ∂ₜuⁿ with deriv="t") on the x, y grids at time t.

    The result is an envelope with carrier 1/h referenced to y = ct.  With
    ``error`` the η and z meshes are each halved and the point-wise
    differences are stored in ``err``."""
    Z = spec.Z(t)
    x = default_x(spec, Z) if x is None else np.asarray(x, dtype=float)
    s_lo, s_hi = support_in_s(spec, Z)
    if y is not None:
        s_given = np.asarray(y, dtype=float) - spec.c * t
        s_lo, s_hi = min(s_lo, s_given.min()), max(s_hi, s_given.max())
    P = default_period(spec, s_lo, s_hi) if period is None else period
    nodes = eta_nodes(spec, P)
    if y is None:
        s = default_s(spec, Z, nodes, r_max)
        periodic = True
    else:
        s = s_given
        periodic = False
        if len(s) > 1 and np.max(np.diff(s)) > spec.h / (8 * nodes.eta.max()) and not _uniform(s):
            raise ResolutionError("y spacing must not exceed h/(8η_max)")
    X = x / spec.a
    C = x_coefficients(spec, X, Z, nodes, deriv)
    vals = synthesize_y(C, nodes, s, spec.h)
    err = None
    if error:
        coarse = _coarsen(nodes)
        keep = nodes.k % 2 == 0
        v1 = synthesize_y(2 * C[:, keep], coarse, s, spec.h)
        C2 = x_coefficients(spec, X, Z, nodes, deriv, zstride=2)
        v2 = synthesize_y(C2, nodes, s, spec.h)
        # the halved η mesh is P/2-periodic; compare on the central half
        # period only, where its images do not reach
        centre = 0.5 * (s_lo + s_hi)
        inner = np.abs(s - centre) <= nodes.period / 4
        e1 = np.where(inner[None, :], np.abs(vals - v1), 0.0)
        err = e1 + np.abs(vals - v2)
    yy = s + spec.c * t
    kw = dict(carrier=1 / spec.h, y_ref=spec.c * t, err=err,
              meta={"Z": Z, "eta_nodes": len(nodes.eta), "period": P, "n": spec.n})
    if periodic:
        return make_field(x, yy, vals, periodic_y=True, y_period=P, **kw)
    return make_field(x, yy, vals, **kw)


def l2_plancherel(spec: CuspSpec, t=0.0, x=None, period=None):
    """‖uⁿ(·, t)‖_{L²(x>0)} from the η coefficients: 2πh Σ dη ∫|Ψ B|² dx."""
    Z = spec.Z(t)
    x = default_x(spec, Z) if x is None else np.asarray(x, dtype=float)
    P = default_period(spec, *support_in_s(spec, Z)) if period is None else period
    nodes = eta_nodes(spec, P)
    C = x_coefficients(spec, x / spec.a, Z, nodes)
    wx = trapezoid_weights(x)
    return math.sqrt(P * float(np.sum(wx[:, None] * np.abs(C) ** 2)))


def caustic_contrast(spec: CuspSpec, t=None, offset=10.0, samples=48):
    """Concentration of |uⁿ(·, t)| on the cusp curve s = ±(2/3)|a - x|^{3/2} - shift.

    Returns (max on the curve, max on the two curves displaced along the
    normal by offset·h^{2/3}); x runs over [a/2, a]."""
    t = spec.time(0.0) if t is None else t
    Z = spec.Z(t)
    a = spec.a
    d = offset * spec.h ** (2 / 3)
    P = default_period(spec, *support_in_s(spec, Z))
    nodes = eta_nodes(spec, P)
    xs, ss, kind = [], [], []
    for x in np.linspace(0.5 * a, a, samples):
        for arm in (-1, 1):
            s = arm * 2 / 3 * (a - x) ** 1.5
            slope = -arm * math.sqrt(a - x)
            nx, ns = -slope / math.hypot(1, slope), 1 / math.hypot(1, slope)
            for side in (0, -1, 1):
                xs.append(x + side * d * nx)
                ss.append(s + side * d * ns)
                kind.append(side != 0)
    xs, ss, kind = np.array(xs), np.array(ss), np.array(kind)
    keep = xs > 0
    order = np.argsort(xs[keep])
    X = xs[keep][order]
    C = x_coefficients(spec, X / a, Z, nodes)
    E = np.exp(1j * np.outer(nodes.k * nodes.deta, ss[keep][order] - spec.shift) / spec.h)
    v = np.abs(np.sum(C * E.T, axis=1))
    off = kind[keep][order]
    return float(v[~off].max()), float(v[off].max())


# ---------------------------------------------------------------- general domain

def general_cusp_eval(jet, spec: CuspSpec, x, y, t=0.0, points_per_wave=32) -> Field2D:
    """uⁿ for the metric of ``jet``: the model phases y - ct and x - a are
    replaced by the jet-truncated θ and ζ at (η, τ) = (1, -(1+a)^{1/2}),
    scaled homogeneously in η; the symbol keeps its k = 0 term.

    G is computed on a fine uniform X grid and interpolated to the
    effective X = 1 + ζ(x, y)/a of each point."""
    from scipy.interpolate import CubicSpline
    if abs(jet.eta - 1) > 1e-12 or abs(jet.tau + spec.c) > 1e-12:
        raise ValueError("jet must be built at η = 1, τ = -(1+a)^{1/2}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    theta = jet.theta(xx, yy)
    X_eff = 1 + jet.zeta(xx, yy) / spec.a
    Z = spec.Z(t)
    lo, hi = float(X_eff.min()), float(X_eff.max())
    lam = spec.lam
    k = 1.07 * lam * math.sqrt(max(1 - lo, 0.0)) + lam ** (2 / 3)
    dX = min(lam ** (-2 / 3) / 48, 2 * np.pi / k / points_per_wave)
    Xg = lo - 2 * dX + dX * np.arange(int(math.ceil((hi - lo) / dX)) + 5)
    s_lo, s_hi = support_in_s(spec, Z)
    th_lo, th_hi = float(theta.min()) - spec.c * t, float(theta.max()) - spec.c * t
    P = default_period(spec, min(s_lo, th_lo), max(s_hi, th_hi))
    nodes = eta_nodes(spec, P)
    Cg = x_coefficients(spec, Xg, Z, nodes)
    vals = np.zeros(xx.shape, dtype=complex)
    ph = (theta - spec.c * t) / spec.h
    env = np.exp(-1j * (yy - spec.c * t) / spec.h)
    for j, eta in enumerate(nodes.eta):
        if not np.any(Cg[:, j]):
            continue
        re = CubicSpline(Xg, Cg[:, j].real)(X_eff)
        im = CubicSpline(Xg, Cg[:, j].imag)(X_eff)
        vals += (re + 1j * im) * np.exp(1j * eta * ph)
    return make_field(x, y, vals * env, carrier=1 / spec.h, y_ref=spec.c * t,
                      meta={"Z": Z, "n": spec.n, "jet_order": jet.order})


def off_lagrangian_fraction(field: Field2D, jet, width=3.0):
    """Fraction of the mass of a general cusp field lying beyond the
    projected caustic x = C(y) by more than width·h^{2/3}."""
    from .eikonal_jets import caustic
    h = 1 / field.carrier
    xc = caustic(field.y, jet.eta, jet.tau, jet)
    w = np.abs(field.values) ** 2 * np.outer(field.wx, field.wy)
    off = field.x[:, None] > xc[None, :] + width * h ** (2 / 3)
    return float(w[off].sum() / w.sum())


def time_covariance(spec: CuspSpec, Z=0.0, r_max=8):
    """Relative L² mismatch of |uⁿ| and |uⁿ⁺¹| one reflection period later,
    after the tangential shift (4/3)a^{3/2} of the billiard map."""
    nxt = spec.with_n(spec.n + 1)
    t0, t1 = spec.time(Z), nxt.time(Z)
    f0 = eval_cusp(spec, t=t0, r_max=r_max)
    s = f0.y - spec.c * t0
    f1 = eval_cusp(nxt, x=f0.x, y=s - 4 / 3 * spec.a ** 1.5 + spec.c * t1, t=t1)
    d = np.abs(f0.values) - np.abs(f1.values)
    w = np.outer(f0.wx, f0.wy)
    return math.sqrt(float(np.sum(w * d ** 2)) / float(np.sum(w * np.abs(f0.values) ** 2)))


# ---------------------------------------------------------------- traces

@dataclass(frozen=True)
class TraceRecord:
    """Boundary trace Tr±(uⁿ) as η coefficients on a t grid.

    Tr(s, t) = Σ_j coeffs[j, l] e^{iη_j s/h} with s = y - ct; ``profile`` is
    the I±(ρⁿ) profile at η = 1 for inspection."""
    sign: int
    n: int
    nodes: EtaNodes
    t: np.ndarray
    coeffs: np.ndarray
    h: float
    profile: SampledProfile | None = field(default=None, compare=False)

    def values(self, s):
        """Physical trace values on (s, t), shape (len(s), len(t))."""
        E = np.exp(1j * np.outer(np.asarray(s, dtype=float), self.nodes.eta) / self.h)
        return E @ self.coeffs

    def l2(self):
        """L² over s ∈ R and the t grid, from Plancherel in s."""
        wt = trapezoid_weights(self.t)
        return math.sqrt(2 * np.pi * self.h / self.nodes.deta
                         * float(np.sum(np.abs(self.coeffs) ** 2 * wt[None, :])))

    def peak(self, oversample=4, chunk=512):
        """max |Tr| over one s period and the t grid."""
        K = int(np.max(np.abs(self.nodes.k)))
        ny = sfft.next_fast_len(oversample * (2 * K + 1))
        out = 0.0
        for i in range(0, len(self.t), chunk):
            spec = np.zeros((ny, min(chunk, len(self.t) - i)), dtype=complex)
            spec[self.nodes.k % ny] = self.coeffs[:, i:i + chunk]
            out = max(out, float(np.max(np.abs(sfft.ifft(spec, axis=0)))) * ny)
        return out

    def __add__(self, other):
        if not (np.array_equal(self.t, other.t) and np.array_equal(self.nodes.eta, other.nodes.eta)):
            raise ValueError("traces must share t grid and η nodes")
        return replace(self, sign=0, coeffs=self.coeffs + other.coeffs, profile=None)


def trace_t_grid(spec: CuspSpec, t_lo, t_hi, stride=1):
    """Times whose profile variable Z is a grid point for every n."""
    m = _seed(spec.scale.c0, spec.lam, spec.settings).m
    l0 = int(math.ceil(t_lo / spec.unit * m))
    l1 = int(math.floor(t_hi / spec.unit * m))
    return np.arange(l0, l1 + 1, stride) * spec.unit / m


def trace(spec: CuspSpec, sign, t=None, period=None, stride=1) -> TraceRecord:
    """Tr±(uⁿ)(s, t) = ∫dη Ψ e^{(i/h)η(s + (4/3)na^{3/2} ∓ (2/3)a^{3/2})}
    √π(h/η)^{1/3}(ηλ)^{-1/6} I±(ρⁿ_η)(Z_n(t)).

    Without t the grid covers the window where the trace lives, keeping
    every stride-th profile grid time."""
    s = 1 if sign in ("+", 1) else -1
    if t is None:
        centre = spec.time(-s)
        half = (spec.scale.c0 + 0.5) * spec.unit
        t = trace_t_grid(spec, centre - half, centre + half, stride)
    t = np.asarray(t, dtype=float)
    Z = spec.Z(t)
    if period is None:
        period = 2 * (4 / 3 * spec.a ** 1.5 + 2 * blur_width(spec))
    nodes = eta_nodes(spec, period)
    w = nodes.weights(spec.psi_halfwidth)
    coeffs = np.zeros((len(nodes.eta), len(t)), dtype=complex)
    key = _key(spec)
    shift = spec.shift - s * 2 / 3 * spec.a ** 1.5
    prof1 = None
    for j, eta in enumerate(nodes.eta):
        if w[j] == 0:
            continue
        prof = _trace_profile(key, float(eta), s)
        amp = w[j] * math.sqrt(math.pi) * (spec.h / eta) ** (1 / 3) * (eta * spec.lam) ** (-1 / 6)
        coeffs[j] = amp * np.exp(1j * eta * shift / spec.h) * prof.at(Z)
        if abs(eta - 1) < 0.5 * nodes.deta:
            prof1 = prof
    return TraceRecord(s, spec.n, nodes, t, coeffs, spec.h, prof1)


def trace_pairing(spec: CuspSpec, period=None):
    """‖Tr₋(uⁿ) + Tr₊(uⁿ⁺¹)‖ / ‖Tr₋(uⁿ)‖ over the window where Tr₋(uⁿ) lives."""
    nxt = spec.with_n(spec.n + 1)
    centre = spec.time(1)
    half = (spec.scale.c0 + 0.5) * spec.unit
    t = trace_t_grid(spec, centre - half, centre + half)
    tm = trace(spec, "-", t, period)
    tp = trace(nxt, "+", t, period)
    return (tm + tp).l2() / tm.l2()


# ---------------------------------------------------------------- the sum

def active_cusps(scale: ScaleParams, t, N=None):
    """Reflection indices whose I_n(c₀) lies within 2c₀·2a^{1/2} of t."""
    N = scale.N if N is None else N
    margin = 2 * scale.c0 * 2 * math.sqrt(scale.a)
    out = []
    for n in range(N + 1):
        lo, hi = scale.interval(n)
        if lo - margin <= t <= hi + margin:
            out.append(n)
    return out


def sum_parametrix(scale: ScaleParams, t, x=None, y=None, N=None, psi_halfwidth=1 / 16,
                   settings=DEFAULT_SETTINGS, deriv=None, period=None, r_max=64) -> Field2D:
    """U = Σ_n uⁿ restricted to the cusps active at time t."""
    ns = active_cusps(scale, t, N)
    if not ns:
        raise ValueError("no cusp is active at this time")
    specs = [CuspSpec(n, scale, psi_halfwidth, settings) for n in ns]
    spans = [support_in_s(sp, sp.Z(t)) for sp in specs]
    s_lo, s_hi = min(a for a, _ in spans), max(b for _, b in spans)
    if y is not None:
        s_given = np.asarray(y, dtype=float) - scale.c * t
        s_lo, s_hi = min(s_lo, s_given.min()), max(s_hi, s_given.max())
    P = default_period(specs[0], s_lo, s_hi) if period is None else period
    nodes = eta_nodes(specs[0], P)
    if x is None:
        xs = [default_x(sp, sp.Z(t)) for sp in specs]
        x = xs[int(np.argmax([len(v) for v in xs]))]
        x = np.linspace(min(v[0] for v in xs), max(v[-1] for v in xs), max(len(v) for v in xs))
    x = np.asarray(x, dtype=float)
    C = sum(x_coefficients(sp, x / scale.a, sp.Z(t), nodes, deriv) for sp in specs)
    if y is None:
        ny = sfft.next_fast_len(max(64, (r_max // 2 + 1) * len(nodes.eta)))
        s = periodic_grid(0.5 * (s_lo + s_hi), P, ny)
    else:
        s = s_given
    vals = synthesize_y(C, nodes, s, scale.h)
    kw = dict(carrier=1 / scale.h, y_ref=scale.c * t, meta={"cusps": ns, "period": P})
    if y is None:
        return make_field(x, s + scale.c * t, vals, periodic_y=True, y_period=P, **kw)
    return make_field(x, s + scale.c * t, vals, **kw)


@dataclass(frozen=True)
class BoundaryDefect:
    """Dirichlet defect of U on [0, T].

    ``edge`` is ‖U(0, ·)‖_{L²(R×[0,T])}, ``interior`` is ‖U‖_{L²(Ω×[0,T])}
    and ``a`` the boundary-layer thickness.  ``relative`` multiplies the
    quotient by a^{1/2}, which makes it dimensionless: an uncancelled
    trace gives a value of order one."""
    edge: float
    interior: float
    a: float
    lam: float

    @property
    def relative(self):
        return self.edge * math.sqrt(self.a) / self.interior


def boundary_defect(scale: ScaleParams, psi_halfwidth=1 / 16, settings=DEFAULT_SETTINGS,
                    stride=2, samples=16) -> BoundaryDefect:
    """Dirichlet defect of U = Σ_{n<=N} uⁿ on [0, T].

    The trace is assembled from Tr±(uⁿ) for all n on a t grid aligned with
    the profile grid (every stride-th point); the interior norm uses the
    Plancherel form of U(·, t) at ``samples`` times per reflection."""
    N = scale.N
    base = CuspSpec(0, scale, psi_halfwidth, settings)
    t = trace_t_grid(base, 0.0, scale.T, stride)
    period = 2 * (4 / 3 * scale.a ** 1.5 + 2 * blur_width(base))
    total = None
    for n in range(N + 1):
        sp = base.with_n(n)
        for sign in ("+", "-"):
            tr = trace(sp, sign, t, period)
            total = tr if total is None else total + tr
    edge = total.l2()
    ts = np.linspace(0.0, scale.T, samples * max(N, 1) * 2 + 1)
    nodes = eta_nodes(base, period)
    x = np.linspace(0.0, scale.a * (1 + 8 * scale.lam ** (-2 / 3)),
                    int(120 * scale.lam ** (2 / 3)) + 1)
    wx = trapezoid_weights(x)
    sq = np.zeros(len(ts))
    for i, tt in enumerate(ts):
        ns = active_cusps(scale, tt, N)
        if ns:
            C = sum(x_coefficients(base.with_n(n), x / scale.a, base.with_n(n).Z(tt), nodes)
                    for n in ns)
            sq[i] = period * float(np.sum(wx[:, None] * np.abs(C) ** 2))
    interior = math.sqrt(float(np.sum(trapezoid_weights(ts) * sq)))
    return BoundaryDefect(edge, interior, scale.a, scale.lam)


# ---------------------------------------------------------------- diagnostics

@dataclass(frozen=True)
class SupportReport:
    """Mass fractions of uⁿ.  t and y fractions are outside I_n(2c₀); the
    x fractions are at the centre of J_n; j_length is the measured length
    of J_n and j_bound the lower bound c₀a^{1/2}."""
    n: int
    t_mass_outside: float
    y_mass_outside: float
    x_mass_near_boundary: float
    x_mass_outside_band: float
    j_length: float
    j_bound: float
    frequency_mass: float


MASS_NODES = 32


def mass_nodes(spec: CuspSpec, count=MASS_NODES) -> EtaNodes:
    """Coarse η rule for quantities that only involve |uⁿ|² integrated in y.

    By Plancherel in y these are η integrals of smooth functions, so a
    trapezoid rule on supp Ψ converges fast; the period is fictitious."""
    e = 1 + spec.psi_halfwidth * np.linspace(-1, 1, count + 2)[1:-1]
    de = e[1] - e[0]
    return EtaNodes(e, np.arange(count) - count // 2, de, 2 * np.pi * spec.h / de)


def _marginal_x(spec: CuspSpec, Z):
    x = default_x(spec, Z)
    if x[0] > 0:
        x = np.concatenate([np.linspace(0, x[0], 32, endpoint=False), x])
    return x


def x_density(spec: CuspSpec, Z, nodes=None):
    """(x, ∫|uⁿ(x, y, t)|² dy) at profile time Z."""
    nodes = mass_nodes(spec) if nodes is None else nodes
    x = _marginal_x(spec, Z)
    C = x_coefficients(spec, x / spec.a, Z, nodes)
    return x, nodes.period * np.sum(np.abs(C) ** 2, axis=1)


def time_mass(spec: CuspSpec, Zs, nodes=None):
    """‖uⁿ(·, t)‖² at each profile time in Zs, with the x densities."""
    out, dens = [], []
    for Z in np.atleast_1d(Zs):
        x, d = x_density(spec, Z, nodes)
        out.append(float(np.sum(trapezoid_weights(x) * d)))
        dens.append((x, d))
    return np.array(out), dens


def x_marginal_fraction(spec: CuspSpec, t, lo=None, hi=None):
    """Fraction of ‖uⁿ(·, t)‖² with x < lo or x > hi (x in absolute units)."""
    x, d = x_density(spec, spec.Z(t))
    w = trapezoid_weights(x) * d
    out = np.zeros(len(x), dtype=bool)
    if lo is not None:
        out |= x < lo
    if hi is not None:
        out |= x > hi
    return float(np.sum(w[out]) / np.sum(w))


def _fraction_below(x, d, cut):
    w = trapezoid_weights(x) * d
    return float(np.sum(w[x < cut]) / np.sum(w))


def support_diagnostics(spec: CuspSpec, dZ=0.05, threshold=1e-4, y_samples=9) -> SupportReport:
    """Mass fractions describing where uⁿ lives in t, y, x and frequency."""
    a, c0 = spec.a, spec.scale.c0
    wide = 1 + 2 * c0
    Zs = np.arange(-2 * wide, 2 * wide + dZ / 2, dZ)
    mass, dens = time_mass(spec, Zs)
    w = trapezoid_weights(Zs) * mass
    t_out = float(np.sum(w[np.abs(Zs) > wide]) / np.sum(w))
    # y marginal: full evaluations at a few times carrying the mass
    y_lo, y_hi = spec.scale.interval(spec.n, 2 * c0)
    live = Zs[mass > 1e-12 * mass.max()]
    Zy = np.linspace(live[0], live[-1], y_samples)
    wy = trapezoid_weights(Zy) * np.interp(Zy, Zs, mass)
    y_out = 0.0
    for Z, wz in zip(Zy, wy):
        f = eval_cusp(spec, t=spec.time(Z), r_max=2)
        d = np.sum(f.wx[:, None] * np.abs(f.values) ** 2, axis=0)
        y_out += wz * float(np.sum(d[(f.y < y_lo) | (f.y > y_hi)]) / np.sum(d))
    y_out /= float(np.sum(wy))
    # x marginal at the centre of J_n
    i0 = int(np.argmin(np.abs(Zs)))
    x, d = dens[i0]
    near = _fraction_below(x, d, a / 4)
    wx = trapezoid_weights(x) * d
    band = float(np.sum(wx[(x < a / 2) | (x > 1.5 * a)]) / np.sum(wx))
    # |J_n|: times around the centre where the x marginal stays off the boundary
    fr = np.array([_fraction_below(xx, dd, a / 4) for xx, dd in dens])
    jlen = 0.0
    if fr[i0] <= threshold:
        i1 = i2 = i0
        while i1 + 1 < len(Zs) and fr[i1 + 1] <= threshold:
            i1 += 1
        while i2 > 0 and fr[i2 - 1] <= threshold:
            i2 -= 1
        jlen = (Zs[i1] - Zs[i2]) * spec.unit
    fmass = frequency_localization(eval_cusp(spec, t=spec.time(0.0), r_max=2),
                                   2 * spec.psi_halfwidth)
    return SupportReport(spec.n, t_out, y_out, near, band, float(jlen),
                         c0 * math.sqrt(a), fmass)


def frequency_localization(field: Field2D, width):
    """Fraction of the y-Fourier mass with |ηh - 1| <= width, where 1/h is
    the carrier of the field."""
    if field.y_period is None:
        raise ValueError("field must be sampled on one y period")
    F = sfft.fft(field.values, axis=1)
    ny = len(field.y)
    k = 2 * np.pi * sfft.fftfreq(ny, field.y_period / ny)
    eta_h = 1 + k / field.carrier
    e = np.sum(field.wx[:, None] * np.abs(F) ** 2, axis=0)
    return float(np.sum(e[np.abs(eta_h - 1) <= width]) / np.sum(e))


def overlap(spec_a: CuspSpec, spec_b: CuspSpec, dZ=0.05):
    """Relative overlap ∫‖uᵃ(t)‖‖uᵇ(t)‖dt / (‖uᵃ‖‖uᵇ‖) of the time marginals."""
    reach = 2 * (1 + 2 * spec_a.scale.c0)
    t = np.union1d((np.arange(-reach, reach + dZ / 2, dZ) + 2 * spec_a.n) * spec_a.unit,
                   (np.arange(-reach, reach + dZ / 2, dZ) + 2 * spec_b.n) * spec_b.unit)
    ma, _ = time_mass(spec_a, spec_a.Z(t))
    mb, _ = time_mass(spec_b, spec_b.Z(t))
    w = trapezoid_weights(t)
    num = float(np.sum(w * np.sqrt(ma * mb)))
    return num / math.sqrt(float(np.sum(w * ma)) * float(np.sum(w * mb)))


# ---------------------------------------------------------------- residual

def _fd_weights(order):
    """Central first and second derivative weights of the given even order."""
    p = order // 2
    offs = np.arange(-p, p + 1)
    A = np.vander(offs, increasing=True).T
    d1 = np.linalg.solve(A, np.eye(len(offs))[1])
    d2 = np.linalg.solve(A, 2 * np.eye(len(offs))[2])
    return offs, d1, d2


def _diff(v, axis, step, order=6):
    offs, d1, d2 = _fd_weights(order)
    p = order // 2
    n = v.shape[axis]
    sl = lambda k: tuple(slice(p + k, n - p + k) if a == axis else slice(None)
                         for a in range(v.ndim))
    f1 = sum(c * v[sl(k)] for k, c in zip(offs, d1)) / step
    f2 = sum(c * v[sl(k)] for k, c in zip(offs, d2)) / step ** 2
    return f1, f2


def box_residual(source, t, x=None, y=None, dt=None, order=6):
    """h‖□u‖/‖u‖ with □ = ∂²ₜ - ∂²ₓ - (1+x)∂²_y applied by finite differences.

    ``source`` is a CuspSpec or a callable (x, y, t) -> Field2D returning
    envelopes with carrier k referenced to y_ref = v·t for a fixed speed v
    (v = 0 for a static reference).  The carrier is removed analytically,
    so the stencils only see the envelope; t derivatives use three
    evaluations on a fixed (x, y) grid."""
    if isinstance(source, CuspSpec):
        spec = source
        h = spec.h
        Z = spec.Z(t)
        if x is None:
            x = default_x(spec, Z, points_per_wave=24)
        if y is None:
            lo, hi = support_in_s(spec, Z)
            P = default_period(spec, lo, hi)
            nodes = eta_nodes(spec, P)
            ny = sfft.next_fast_len(4 * len(nodes.eta))
            y = periodic_grid(0.5 * (lo + hi), P, ny) + spec.c * t

            def evaluate(tt):
                f = eval_cusp(spec, x, y, tt, period=P)
                return make_field(f.x, f.y, f.values, periodic_y=True, carrier=f.carrier,
                                  y_ref=f.y_ref)
        else:
            evaluate = lambda tt: eval_cusp(spec, x, y, tt)
    else:
        evaluate = lambda tt: source(x, y, tt)
    f = evaluate(t)
    kc = f.carrier
    if not isinstance(source, CuspSpec):
        h = 1 / kc if kc else 1.0
    dt = h / 300 if dt is None else dt
    fm, fp = evaluate(t - dt), evaluate(t + dt)
    # speed of the envelope reference
    vref = (fp.y_ref - fm.y_ref) / (2 * dt)
    v_m, v_0, v_p = fm.values, f.values, fp.values
    v_t = (v_p - v_m) / (2 * dt)
    v_tt = (v_p - 2 * v_0 + v_m) / dt ** 2
    xg, yg = f.x, f.y
    dx = xg[1] - xg[0]
    dy = yg[1] - yg[0]
    _, vxx = _diff(v_0, 0, dx, order)
    p = order // 2
    if f.y_period is not None:
        # one full period: differentiate spectrally in y
        k = 2 * np.pi * sfft.fftfreq(len(yg), dy)
        F = sfft.fft(v_0, axis=1)
        vy1 = sfft.ifft(1j * k * F, axis=1)
        vyy = sfft.ifft(-k * k * F, axis=1)
        ys = slice(None)
    else:
        vy1, vyy = _diff(v_0, 1, dy, order)
        vy1 = np.pad(vy1, ((0, 0), (p, p)))
        vyy = np.pad(vyy, ((0, 0), (p, p)))
        ys = slice(p, -p)
    core = (slice(p, -p), ys)
    V = v_0[core]
    X = xg[p:-p][:, None]
    w = -kc * vref
    # u = V e^{i(kc·y + w·t)}: ∂ₜ → ∂ₜ + iw and ∂_y → ∂_y + ikc
    utt = v_tt[core] + 2j * w * v_t[core] - w ** 2 * V
    uyy = vyy[core] + 2j * kc * vy1[core] - kc ** 2 * V
    box = utt - vxx[:, ys] - (1 + X) * uyy
    wts = np.outer(trapezoid_weights(xg[p:-p]), f.wy[ys])
    num = math.sqrt(float(np.sum(wts * np.abs(box) ** 2)))
    den = math.sqrt(float(np.sum(wts * np.abs(V) ** 2)))
    return h * num / den
