"""Symbol class S_K(λ), the mollified seed, trace operators I±, their
inverses J±, translations and the reflected profiles ρⁿ.

Profiles live on a uniform z grid with spacing 1/m (m integer), so integer
translations are exact index shifts.  I± and J± are convolutions in z;
with k = ηλ·w the dual variable they are Fourier multipliers

    I±:  e^{∓i(2/3)ηλ((1-w)^{3/2}-1)} κ(w) a±(w, ηλ)
    J±:  e^{±i(2/3)ηλ((1-w)^{3/2}-1)} b±(w, ηλ),   b± = κ/a±

and are applied with the FFT.  I± moves support from K_p to K_{p∓1}.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from functools import lru_cache
import math

import numpy as np
from scipy import fft as sfft
from scipy.signal import oaconvolve

from .special_airy import _sign, symbol_a

MIN_ETA_LAMBDA = 50.0


# ---------------------------------------------------------------- cutoffs

def _expinv(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C^∞ step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a, b = _expinv(t), _expinv(1 - t)
    return a / (a + b)


def bump(x):
    """exp(-1/(1-x²)) on |x| < 1, zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


@dataclass(frozen=True)
class SymbolSettings:
    """Shape knobs shared by the operators and the seed.

    κ equals 1 on |w| <= kappa_plateau and vanishes for |w| >= kappa_halfwidth.
    The flat seed equals 1 on |z| <= c₀ - seed_edge and rises over seed_edge.
    """
    kappa_halfwidth: float = 0.25
    kappa_plateau: float = 0.15
    seed_edge: float = 0.25
    seed_profile: str = "flat"

    def __post_init__(self):
        if not 0 < self.kappa_plateau < self.kappa_halfwidth <= 0.5:
            raise ValueError("need 0 < kappa_plateau < kappa_halfwidth <= 1/2")
        if self.seed_profile not in ("flat", "bump", "indicator"):
            raise ValueError(f"unknown seed profile {self.seed_profile!r}")


DEFAULT_SETTINGS = SymbolSettings()


def kappa(w, settings: SymbolSettings = DEFAULT_SETTINGS):
    w = np.abs(np.asarray(w, dtype=float))
    s = settings
    return 1.0 - smooth_step((w - s.kappa_plateau) / (s.kappa_halfwidth - s.kappa_plateau))


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class SampledProfile:
    """ϱ(z, λ) sampled at z_j = (j - n//2)/m, j = 0..n-1."""
    m: int
    values: np.ndarray
    lam: float
    K: tuple = (-0.375, 0.375)
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return len(self.values)

    @property
    def dz(self):
        return 1.0 / self.m

    @property
    def z(self):
        return (np.arange(self.n) - self.n // 2) / self.m

    @property
    def extent(self):
        return (self.n // 2) / self.m

    def with_values(self, values, K=None, **meta):
        return replace(self, values=values, K=self.K if K is None else K,
                       meta={**self.meta, **meta})

    def integral(self):
        return complex(np.sum(self.values) * self.dz)

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def exterior_mass(self, K=None, margin=0.0):
        """Fraction of the L² mass outside [K₀ - margin, K₁ + margin]."""
        k0, k1 = self.K if K is None else K
        z = self.z
        out = (z < k0 - margin) | (z > k1 + margin)
        total = np.sum(np.abs(self.values) ** 2)
        return float(np.sum(np.abs(self.values[out]) ** 2) / total) if total > 0 else 0.0

    def derivative(self, order=1):
        """Spectral derivative on the periodic grid."""
        k = 2 * np.pi * sfft.fftfreq(self.n, self.dz)
        return sfft.ifft((1j * k) ** order * sfft.fft(self.values))

    def at(self, zq):
        """Values at grid points zq (must lie on the grid)."""
        idx = np.rint(np.asarray(zq) * self.m).astype(int) + self.n // 2
        if np.any(np.abs(idx - self.n // 2 - np.asarray(zq) * self.m) > 1e-6):
            raise ValueError("query points are not grid points")
        out = np.zeros(idx.shape, dtype=complex)
        ok = (idx >= 0) & (idx < self.n)
        out[ok] = self.values[idx[ok]]
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["z", "re", "im"])
            for z, v in zip(self.z, np.asarray(self.values, dtype=complex)):
                w.writerow([repr(float(z)), repr(float(v.real)), repr(float(v.imag))])


def grid_size(c0, lam, extent):
    """Points per unit length m and grid length n for a profile grid."""
    m = int(math.ceil(max(10.0 * lam, 50.0 / c0) - 1e-9))
    half = int(math.ceil(extent * m))
    n = sfft.next_fast_len(2 * half + 1)
    n += n % 2
    return m, n


def extend(prof: SampledProfile, extent) -> SampledProfile:
    """Zero-pad the grid so it covers at least [-extent, extent]."""
    if prof.extent >= extent:
        return prof
    half = int(math.ceil(extent * prof.m))
    n = sfft.next_fast_len(2 * half + 1)
    n += n % 2
    out = np.zeros(n, dtype=np.result_type(prof.values, float))
    off = n // 2 - prof.n // 2
    out[off:off + prof.n] = prof.values
    return replace(prof, values=out)


def make_seed(c0, lam, settings: SymbolSettings = DEFAULT_SETTINGS, extent=None, m=None):
    """Bump supported in K₀ = [-c₀, c₀] convolved with k_λ(z) = λk(λz).

    ``m`` (points per unit) defaults to max(10λ, 50/c₀); it must satisfy
    1/m <= 1/(10λ).  The mollifier is normalised to unit discrete mass, so
    the discrete integral of the seed equals that of the bump."""
    if not 0 < c0 <= 0.375:
        raise ValueError("c₀ must lie in (0, 3/8]")
    if lam < 10:
        raise ValueError("λ must be at least 10")
    extent = 3.0 + c0 if extent is None else extent
    m0, n = grid_size(c0, lam, extent)
    if m is None:
        m = m0
    elif m < 10 * lam * (1 - 1e-12):
        raise ValueError("grid too coarse: spacing must be <= 1/(10λ)")
    else:
        half = int(math.ceil(extent * m))
        n = sfft.next_fast_len(2 * half + 1)
        n += n % 2
    z = (np.arange(n) - n // 2) / m
    base = _seed_shape(z, c0, settings)
    # mollifier samples on ±1/λ
    r = int(math.ceil(m / lam))
    kz = np.arange(-r, r + 1) / m
    ker = bump(lam * kz)
    ker /= ker.sum()
    vals = np.convolve(base, ker, mode="same")
    return SampledProfile(m, vals.astype(complex), float(lam), (-c0, c0),
                          meta={"bump_integral": float(base.sum() / m)})


def _seed_shape(z, c0, settings):
    if settings.seed_profile == "flat":
        return smooth_step((c0 - np.abs(z)) / settings.seed_edge)
    if settings.seed_profile == "bump":
        return bump(z / c0)
    return (np.abs(z) <= c0).astype(float)


def edge_width(prof: SampledProfile, lo=0.1, hi=0.9):
    """Width of the right edge between the lo and hi fractions of the plateau."""
    z = prof.z
    v = np.abs(prof.values)
    top = v.max()
    right = z > 0
    zr, vr = z[right], v[right]
    # vr decreases through the edge; interpolate the crossing points
    def crossing(level):
        i = np.nonzero(vr < level * top)[0][0]
        f0, f1 = vr[i - 1], vr[i]
        return zr[i - 1] + (f0 - level * top) / (f0 - f1) * (zr[i] - zr[i - 1])
    return float(crossing(lo) - crossing(hi))


# ---------------------------------------------------------------- operators

def _check_eta_lambda(prof, eta):
    L = eta * prof.lam
    if L < MIN_ETA_LAMBDA:
        raise ValueError(f"ηλ = {L:.3g} below the asymptotic validity threshold {MIN_ETA_LAMBDA}")
    return L


def _symbols(w, L, settings):
    """κ(w), a₊(w), a₋(w) with a± set to 1 where κ vanishes."""
    kap = kappa(w, settings)
    on = kap > 0
    ap = np.ones(w.shape, dtype=complex)
    am = np.ones(w.shape, dtype=complex)
    ap[on] = symbol_a(1, w[on], L)
    am[on] = symbol_a(-1, w[on], L)
    return kap, ap, am, on


@lru_cache(maxsize=48)
def _multipliers(n, m, L, settings):
    k = 2 * np.pi * sfft.fftfreq(n, 1.0 / m)
    w = k / L
    kap, ap, am, on = _symbols(w, L, settings)
    phi = (2.0 / 3.0) * L * ((1 - np.minimum(w, 0.5)) ** 1.5 - 1)
    out = {}
    for s, a in ((1, ap), (-1, am)):
        out["I", s] = np.exp(-s * 1j * phi) * kap * a
        out["J", s] = np.where(on, np.exp(s * 1j * phi) * kap / a, 0.0)
    # one reflection step -T₁ J₊ I₋ T₁
    out["R", 0] = np.where(on, -np.exp(2j * k + 2j * phi) * kap ** 2 * am / ap, 0.0)
    for v in out.values():
        v.setflags(write=False)
    return out


def multiplier(kind, sign, prof: SampledProfile, eta, settings=DEFAULT_SETTINGS):
    L = _check_eta_lambda(prof, eta)
    return _multipliers(prof.n, prof.m, float(L), settings)[kind, sign]


def _apply(mult, prof):
    return sfft.ifft(mult * sfft.fft(prof.values))


def op_I(sign, prof: SampledProfile, eta, settings=DEFAULT_SETTINGS) -> SampledProfile:
    """I±(ϱ)_η; support moves from K_p to K_{p∓1}."""
    s = _sign(sign)
    vals = _apply(multiplier("I", s, prof, eta, settings), prof)
    k0, k1 = prof.K
    return prof.with_values(vals, K=(k0 - s, k1 - s))


def op_J(sign, prof: SampledProfile, eta, settings=DEFAULT_SETTINGS) -> SampledProfile:
    """J±(ϱ)_η, the inverse of I± on the band where κ = 1."""
    s = _sign(sign)
    vals = _apply(multiplier("J", s, prof, eta, settings), prof)
    k0, k1 = prof.K
    return prof.with_values(vals, K=(k0 + s, k1 + s))


def translate(k, prof: SampledProfile) -> SampledProfile:
    """T_k ϱ(z) = ϱ(z + k), zero-filled at the grid edge."""
    if int(k) != k:
        raise ValueError("translation must be by an integer")
    shift = int(k) * prof.m
    out = np.zeros_like(prof.values)
    if shift >= 0:
        out[:prof.n - shift] = prof.values[shift:]
    else:
        out[-shift:] = prof.values[:prof.n + shift]
    k0, k1 = prof.K
    return prof.with_values(out, K=(k0 - k, k1 - k))


def reflection_extent(c0, n):
    """Grid half-width needed for ρⁿ: base window plus the kernel drift."""
    return 4.0 + c0 + 0.3 * n


def _validate_reflection(prof, eta, n, scale):
    if n < 0 or int(n) != n:
        raise ValueError("reflection count must be a non-negative integer")
    if scale is not None and n > 0:
        if n > scale.N:
            raise ValueError(f"n = {n} exceeds N = {scale.N}")
        if prof.lam / n < scale.h ** -scale.eps * (1 - 1e-12):
            raise ValueError("validity condition λ/n >= h^(-ε) violated")


def reflect_n(prof: SampledProfile, eta, n, scale=None, settings=DEFAULT_SETTINGS,
              method="iterate") -> SampledProfile:
    """ρⁿ = (-1)ⁿ (T₁ J₊ I₋ T₁)ⁿ ϱ.

    method "iterate" applies the four operators n times; "power" raises the
    one-step multiplier to the n-th power; "kernel" convolves once with the
    reflection kernel built by direct w-quadrature."""
    _validate_reflection(prof, eta, n, scale)
    if n == 0:
        return prof
    c0 = max(abs(prof.K[0]), abs(prof.K[1]))
    prof = extend(prof, reflection_extent(c0, n))
    if method == "iterate":
        v = prof
        for _ in range(n):
            v = translate(1, v)
            v = op_I(-1, v, eta, settings)
            v = op_J(1, v, eta, settings)
            v = translate(1, v)
            v = v.with_values(-v.values)
        return v.with_values(v.values, K=prof.K, n=n, eta=eta)
    if method == "power":
        mult = multiplier("R", 0, prof, eta, settings)
        return prof.with_values(_apply(mult ** n, prof), n=n, eta=eta)
    if method == "kernel":
        ker = ReflectionKernel.build(n, eta * prof.lam, prof.m, settings)
        vals = oaconvolve(prof.values, ker.values, mode="same") * prof.dz
        return prof.with_values(vals, n=n, eta=eta, kernel_err=ker.err)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class ReflectionKernel:
    """(F_{ηλ})^{*n} sampled at s_j = j/m, |j| <= half."""
    n: int
    eta_lambda: float
    m: int
    values: np.ndarray
    err: float
    settings: SymbolSettings = DEFAULT_SETTINGS

    @property
    def s(self):
        half = len(self.values) // 2
        return np.arange(-half, half + 1) / self.m

    @staticmethod
    def _evaluate(s, n, L, settings, panels_per_unit):
        hw = settings.kappa_halfwidth
        npan = int(math.ceil(2 * hw * L * panels_per_unit / math.pi))
        x, wt = np.polynomial.legendre.leggauss(16)
        edges = np.linspace(-hw, hw, npan + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        w = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wq = (half[:, None] * wt[None, :]).ravel()
        kap, ap, am, _ = _symbols(w, L, settings)
        phi = (2.0 / 3.0) * L * ((1 - w) ** 1.5 - 1)
        step = -np.exp(1j * (2 * L * w + 2 * phi)) * kap ** 2 * am / ap
        coef = wq * step ** n * L / (2 * np.pi)
        out = np.empty(len(s), dtype=complex)
        for i in range(0, len(s), 2048):
            out[i:i + 2048] = np.exp(1j * L * np.outer(s[i:i + 2048], w)) @ coef
        return out

    @classmethod
    def build(cls, n, eta_lambda, m, settings=DEFAULT_SETTINGS, reach=None):
        """Gauss–Legendre panels of width <= π/(ηλ), checked against panels
        of half that width; ``err`` is the sup difference.  The smooth
        cutoff makes the kernel tails decay slowly, hence the wide reach."""
        L = float(eta_lambda)
        reach = 0.3 * n + 4.0 if reach is None else reach
        half = int(math.ceil(reach * m))
        s = np.arange(-half, half + 1) / m
        coarse = cls._evaluate(s, n, L, settings, 1.0)
        fine = cls._evaluate(s, n, L, settings, 2.0)
        return cls(n, L, m, fine, float(np.max(np.abs(fine - coarse))), settings)


# ---------------------------------------------------------------- class check

@dataclass(frozen=True)
class ClassCertificate:
    constants: tuple
    exterior_mass: float
    derivative_ok: bool
    decay_ok: bool

    @property
    def passed(self):
        return self.derivative_ok and self.decay_ok


def derivative_constants(prof: SampledProfile, order=4, step=0.02):
    """sup |∂^α ϱ| for α = 0..order by central differences.

    The stencil step is a multiple of the grid spacing near ``step`` so the
    λ-scale grid does not amplify rounding."""
    q = max(1, int(round(step * prof.m)))
    H = q / prof.m
    v = np.asarray(prof.values, dtype=complex)
    out = [float(np.max(np.abs(v)))]
    d = v
    for _ in range(order):
        nxt = np.zeros_like(d)
        nxt[q:-q] = (d[2 * q:] - d[:-2 * q]) / (2 * H)
        d = nxt
        out.append(float(np.max(np.abs(d))))
    return tuple(out)


def class_check(prof: SampledProfile, K=None, lam=None, bounds=None, margin=0.25,
                decay_tol=1e-6) -> ClassCertificate:
    """Check the two defining conditions of S_K(λ) on the grid.

    Condition 1: the measured derivative constants stay below ``bounds``
    (when given).  Condition 2: the L² mass outside K widened by ``margin``
    is below ``decay_tol``."""
    K = prof.K if K is None else K
    consts = derivative_constants(prof)
    ext = prof.exterior_mass(K, margin)
    dok = True if bounds is None else all(c <= b for c, b in zip(consts, bounds))
    dok = dok and all(np.isfinite(consts))
    return ClassCertificate(consts, ext, bool(dok), bool(ext <= decay_tol))
