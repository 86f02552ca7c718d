"""Norms of sampled fields, admissibility and loss arithmetic, exponent
fitting on h-ladders, and streamed norms of cusp solutions.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
import io
import math
import struct

import numpy as np
from scipy import fft as sfft

from .billiard_maps import ScaleParams
from .cusp_parametrix import (CuspSpec, _coarsen, default_period, default_x, eta_nodes,
                              support_in_s, x_coefficients)
from .model_spectrum import Field2D, WaveState, trapezoid_weights

M_GALLERY = 4.0


class ResolutionError(ValueError):
    pass


class UndersamplingError(ValueError):
    pass


class DegenerateLadderError(ValueError):
    pass


class LossRegimeError(ValueError):
    pass


# ---------------------------------------------------------------- exponents

@dataclass(frozen=True)
class AdmissiblePair:
    """Sharp wave-admissible pair: 2/q + (d-1)/r = (d-1)/2, γ = d/2 - d/r - 1/q."""
    q: float
    r: float
    d: int = 2

    def __post_init__(self):
        if not (self.q > 2 and self.r > 2):
            raise ValueError("need q > 2 and r > 2 (the endpoint q = 2 is excluded)")
        if abs(2 / self.q + (self.d - 1) / self.r - (self.d - 1) / 2) > 1e-12:
            raise ValueError("pair is not sharp admissible")

    @property
    def gamma(self):
        return self.d / 2 - self.d / self.r - 1 / self.q

    @classmethod
    def from_r(cls, r, d=2):
        return cls(2 / ((d - 1) * (0.5 - 1 / r)), r, d)


def free_space_exponent(r, d=2):
    """(d+1)/2·(1/2 - 1/r)."""
    return (d + 1) / 2 * (0.5 - 1 / r)


def loss_exponent(r):
    """(1/6)(1/4 - 1/r); zero at r = 4 and undefined below."""
    if r < 4:
        raise LossRegimeError("the loss term is only defined for r >= 4")
    return (0.25 - 1 / r) / 6


def beta_loss(r, d=2):
    """β(r) = (d+1)/2·(1/2 - 1/r) + (1/6)(1/4 - 1/r), for r > 4."""
    if r <= 4:
        raise LossRegimeError("β(r) is only meaningful for r > 4 (empty loss regime)")
    return free_space_exponent(r, d) + loss_exponent(r)


def lr_slope_prediction(r):
    """h-exponent of ‖u⁰(·, t)‖_{L^r} at the centre of J₀ for r > 4."""
    return 1 / 3 + 5 / (3 * r)


def l2_slope_prediction(eps):
    """h-exponent of ‖u⁰(·, 0)‖_{L²} ≃ h·a^{1/4}."""
    return 1 + (1 - eps) / 8


def quotient_slope_prediction(r, eps):
    """Slope of ‖u⁰‖_{L^r}/‖u⁰(0)‖_{L²}: -β(r) + ε/8."""
    return lr_slope_prediction(r) - l2_slope_prediction(eps)


# ---------------------------------------------------------------- field norms

def _lr_sum(values, wx, wy, r):
    return float(np.sum(wx[:, None] * wy[None, :] * np.abs(values) ** r))


def lr_norm(field: Field2D, r, error=False):
    """Weighted discrete L^r norm; with ``error`` also the change when
    every other x (and non-periodic y) sample is dropped."""
    if not 2 <= r < math.inf:
        raise ValueError("r must lie in [2, ∞)")
    val = _lr_sum(field.values, field.wx, field.wy, r) ** (1 / r)
    if not error:
        return val
    if len(field.x) < 5:
        raise ResolutionError("too few x samples for a mesh-halving estimate")
    xs = slice(None, None, 2)
    wx2 = trapezoid_weights(field.x[xs])
    if field.y_period is None:
        ys = slice(None, None, 2)
        wy2 = trapezoid_weights(field.y[ys])
    else:
        ys, wy2 = slice(None), field.wy
    coarse = _lr_sum(field.values[xs, ys], wx2, wy2, r) ** (1 / r)
    return val, abs(val - coarse)


def _clenshaw_curtis(n):
    """Nodes (ascending, in [-1, 1]) and weights of n-point Clenshaw-Curtis."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    N = n - 1
    theta = np.pi * np.arange(n) / N
    x = -np.cos(theta)
    w = np.zeros(n)
    v = np.ones(n - 2)
    if N % 2 == 0:
        w[0] = w[-1] = 1 / (N * N - 1)
        for k in range(1, N // 2):
            v -= 2 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
        v -= np.cos(N * theta[1:-1]) / (N * N - 1)
    else:
        w[0] = w[-1] = 1 / (N * N)
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
    w[1:-1] = 2 * v / N
    return x, w


def window_times(windows, per_window=12):
    """Chebyshev (Clenshaw-Curtis) sample times in each window (lo, hi)."""
    x, _ = _clenshaw_curtis(per_window)
    return [lo + (hi - lo) * (x + 1) / 2 for lo, hi in windows]


def _envelope_resolved(vals, tol):
    """Chebyshev coefficients of samples at Clenshaw-Curtis nodes: the top
    quarter must carry at most ``tol`` of the total."""
    n = len(vals)
    c = np.polynomial.chebyshev.chebfit(_clenshaw_curtis(n)[0], vals, n - 1)
    tail = np.abs(c[-max(2, n // 4):]).sum()
    return tail <= tol * max(np.abs(c).sum(), 1e-300)


def mixed_norm(samples, q, r=None, windows=None, times=None, tol=1e-2):
    """‖u‖_{L^q_t L^r} from time samples.

    ``samples`` holds Field2D snapshots (``r`` required) or precomputed
    L^r norms.  With ``windows`` the samples are grouped per window, in the
    order produced by window_times, and each window is integrated by
    Clenshaw-Curtis; otherwise ``times`` are integrated by the trapezoid
    rule.  A window whose envelope is not resolved raises
    UndersamplingError."""
    vals = np.array([lr_norm(s, r) if isinstance(s, Field2D) else float(s) for s in samples])
    if q < 1:
        raise ValueError("q must be at least 1")
    if windows is not None:
        n = len(vals) // len(windows)
        if n * len(windows) != len(vals):
            raise ValueError("samples must split evenly over the windows")
        if n < 8:
            raise UndersamplingError("need at least 8 samples per window")
        _, w = _clenshaw_curtis(n)
        total = 0.0
        for k, (lo, hi) in enumerate(windows):
            v = vals[k * n:(k + 1) * n] ** q
            if not _envelope_resolved(v, tol):
                raise UndersamplingError(f"t-envelope in window {k} is not resolved")
            total += (hi - lo) / 2 * float(w @ v)
        return total ** (1 / q)
    if times is None:
        raise ValueError("give either windows or times")
    t = np.asarray(times, dtype=float)
    v = vals ** q
    full = float(trapezoid_weights(t) @ v)
    if len(t) >= 5:
        half = float(trapezoid_weights(t[::2]) @ v[::2])
        if abs(full - half) > tol * abs(full) * 10:
            raise UndersamplingError("t-envelope changes under sample halving")
    return full ** (1 / q)


def sobolev_norm(state: WaveState, s):
    """Spectral Ḣ^s norm (P Σ μ^s |c|²)^{1/2} of the position coefficients."""
    if abs(s) > 2:
        raise ValueError("|s| must not exceed 2")
    mu = state.basis.mu
    return math.sqrt(state.basis.period * float(np.sum(mu ** s * np.abs(state.pos) ** 2)))


# ---------------------------------------------------------------- ladders

@dataclass
class LadderRecord:
    """Norms measured along a geometric h-ladder."""
    h: np.ndarray
    a: np.ndarray
    lam: np.ndarray
    N: np.ndarray
    norms: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_scales(cls, scales, **meta):
        return cls(np.array([s.h for s in scales]), np.array([s.a for s in scales]),
                   np.array([s.lam for s in scales]), np.array([s.N for s in scales], dtype=float),
                   meta=dict(meta))

    def add(self, label, values, errors=None):
        values = np.asarray(values, dtype=float)
        if values.shape != self.h.shape:
            raise ValueError("one value per ladder point is required")
        self.norms[label] = values
        self.errors[label] = np.zeros_like(values) if errors is None else np.asarray(errors, float)

    def labels(self):
        return list(self.norms)

    def check_errors(self, label):
        """Per-point error is at most 10% of the smallest gap in the norms."""
        v = self.norms[label]
        gap = np.min(np.abs(np.diff(v)))
        return bool(np.all(self.errors[label] <= 0.1 * gap))

    def to_csv(self, path_or_buf=None):
        """CSV with one row per h; every norm column has an error column."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["h", "a", "lambda", "N"]
        for k in self.norms:
            cols += [k, k + "_err"]
        w.writerow(cols)
        for i in range(len(self.h)):
            row = [self.h[i], self.a[i], self.lam[i], self.N[i]]
            for k in self.norms:
                row += [self.norms[k][i], self.errors[k][i]]
            w.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
        return text

    MAGIC = b"CWLADDER"
    VERSION = 1

    def to_bytes(self):
        """Magic, version byte, then little-endian counts and f64 arrays."""
        labels = list(self.norms)
        out = [self.MAGIC, bytes([self.VERSION]), struct.pack("<II", len(self.h), len(labels))]
        for arr in (self.h, self.a, self.lam, self.N):
            out.append(np.asarray(arr, "<f8").tobytes())
        for k in labels:
            name = k.encode()
            out.append(struct.pack("<I", len(name)) + name)
            out.append(np.asarray(self.norms[k], "<f8").tobytes())
            out.append(np.asarray(self.errors[k], "<f8").tobytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data):
        if data[:8] != cls.MAGIC:
            raise ValueError("not a ladder record")
        if data[8] != cls.VERSION:
            raise ValueError(f"unsupported ladder record version {data[8]}")
        n, nl = struct.unpack_from("<II", data, 9)
        pos = 17

        def arr():
            nonlocal pos
            v = np.frombuffer(data, "<f8", n, pos).astype(float)
            pos += 8 * n
            return v
        h, a, lam, N = arr(), arr(), arr(), arr()
        rec = cls(h, a, lam, N)
        for _ in range(nl):
            (ln,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos:pos + ln].decode()
            pos += ln
            rec.norms[name] = arr()
            rec.errors[name] = arr()
        if pos != len(data):
            raise ValueError("trailing bytes in ladder record")
        return rec


def fit_exponent(x, y=None, err=None, min_points=8, min_decades=2.0):
    """Slope and standard error of log y against log x.

    Accepts (LadderRecord, label) or arrays (h, values[, errors]).  Points
    are weighted by their relative error when one is given; the standard
    error comes from the residuals."""
    if isinstance(x, LadderRecord):
        rec, label = x, y
        h, v, e = rec.h, rec.norms[label], rec.errors[label]
    else:
        h, v = np.asarray(x, float), np.asarray(y, float)
        e = np.zeros_like(v) if err is None else np.asarray(err, float)
    if len(h) < min_points:
        raise DegenerateLadderError(f"need at least {min_points} ladder points")
    if np.log10(h.max() / h.min()) < min_decades - 1e-9:
        raise DegenerateLadderError(f"ladder must span at least {min_decades} decades")
    if np.any(v <= 0):
        raise DegenerateLadderError("values must be positive")
    lx, ly = np.log(h), np.log(v)
    rel = e / v
    w = np.ones_like(lx) if not np.any(rel > 0) else 1 / np.maximum(rel, rel[rel > 0].min()) ** 2
    A = np.vstack([lx, np.ones_like(lx)]).T
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], ly * sw, rcond=None)
    res = (ly - A @ coef) * sw
    dof = len(lx) - 2
    cov = np.linalg.inv((A * w[:, None]).T @ A) * float(res @ res) / dof
    return float(coef[0]), float(math.sqrt(cov[0, 0]))


# ---------------------------------------------------------------- cusp norms

def _stream_lr(C, nodes, wx, rs, chunk):
    """Σ_x wx Σ_y dy |V|^r for each r, with V synthesized on one period.

    V is a trigonometric polynomial of degree K = max|k| in s, so |V|^r is
    one of degree rK for even r and ny > rK samples integrate it exactly."""
    K = int(np.max(np.abs(nodes.k)))
    ny = sfft.next_fast_len(max(rs) * K + 2)
    dy = nodes.period / ny
    sums = {r: 0.0 for r in rs}
    idx = nodes.k % ny
    for i in range(0, C.shape[0], chunk):
        spec = np.zeros((min(chunk, C.shape[0] - i), ny), dtype=complex)
        spec[:, idx] = C[i:i + chunk]
        a = np.abs(sfft.ifft(spec, axis=1, overwrite_x=True)) * ny
        w = wx[i:i + chunk]
        for r in rs:
            sums[r] += float(w @ np.sum(a ** r, axis=1)) * dy
    return sums


@dataclass(frozen=True)
class CuspNorms:
    t: float
    l2: float
    l2_err: float
    lr: dict
    lr_err: dict
    regime: dict


def cusp_norms(spec: CuspSpec, t=None, rs=(6, 8, 64), M=M_GALLERY, chunk=256, error=True):
    """L² and L^r norms of uⁿ(·, t) (t defaults to the centre of J_n).

    The L² norm uses Plancherel in y; the L^r norms are streamed over x.
    Errors come from halving the η mesh and, separately, the x mesh.  The
    regime entry gives, per r, the fraction of ∫|u|^r in the gallery zone
    |x - a| <= M h^{2/3}, in the rest of x <= 3a/2, and beyond 3a/2."""
    t = spec.time(0.0) if t is None else t
    Z = spec.Z(t)
    x = default_x(spec, Z)
    P = default_period(spec, *support_in_s(spec, Z))
    nodes = eta_nodes(spec, P)
    C = x_coefficients(spec, x / spec.a, Z, nodes)
    wx = trapezoid_weights(x)
    l2sq = P * float(np.sum(wx[:, None] * np.abs(C) ** 2))
    rs = tuple(int(r) for r in rs)
    if any(r % 2 for r in rs):
        raise ValueError("streamed L^r norms require even r")
    sums = _stream_lr(C, nodes, wx, rs, chunk)
    lr = {r: sums[r] ** (1 / r) for r in rs}
    # regime split
    g = np.abs(x - spec.a) <= M * spec.h ** (2 / 3)
    inner = (~g) & (x <= 1.5 * spec.a)
    outer = x > 1.5 * spec.a
    regime = {}
    for r in rs:
        parts = [_stream_lr(C[m], nodes, wx[m], (r,), chunk)[r] if np.any(m) else 0.0
                 for m in (g, inner, outer)]
        tot = sum(parts)
        regime[r] = tuple(p / tot for p in parts)
    l2_err, lr_err = 0.0, {r: 0.0 for r in rs}
    if error:
        coarse = _coarsen(nodes)
        keep = nodes.k % 2 == 0
        Cc = 2 * C[:, keep]
        l2c = coarse.period * float(np.sum(wx[:, None] * np.abs(Cc) ** 2))
        sc = _stream_lr(Cc, coarse, wx, rs, chunk)
        wx2 = trapezoid_weights(x[::2])
        l2x = P * float(np.sum(wx2[:, None] * np.abs(C[::2]) ** 2))
        sx = _stream_lr(C[::2], nodes, wx2, rs, chunk)
        l2 = math.sqrt(l2sq)
        l2_err = abs(l2 - math.sqrt(l2c)) + abs(l2 - math.sqrt(l2x))
        lr_err = {r: abs(lr[r] - sc[r] ** (1 / r)) + abs(lr[r] - sx[r] ** (1 / r)) for r in rs}
    return CuspNorms(float(t), math.sqrt(l2sq), l2_err, lr, lr_err, regime)


def h_ladder(h_max, h_min, count):
    if count < 2 or not 0 < h_min < h_max:
        raise DegenerateLadderError("ladder needs count >= 2 and 0 < h_min < h_max")
    return np.geomspace(h_max, h_min, count)


def norm_ladder(hs, eps, rs=(6, 8, 64), Y=1024.0, psi_halfwidth=1 / 16, settings=None,
                progress=None, **scale_kw) -> LadderRecord:
    """‖u⁰(·, 0)‖_{L²} and ‖u⁰(·, t)‖_{L^r} at the centre of J₀ along the ladder."""
    from .symbol_calculus import DEFAULT_SETTINGS
    settings = DEFAULT_SETTINGS if settings is None else settings
    scales = [ScaleParams(float(h), eps, Y=Y, **scale_kw) for h in hs]
    rec = LadderRecord.from_scales(scales, eps=eps, Y=Y)
    rows = []
    for sc in scales:
        cn = cusp_norms(CuspSpec(0, sc, psi_halfwidth, settings), rs=rs)
        rows.append(cn)
        if progress:
            progress(sc, cn)
    rec.add("L2", [c.l2 for c in rows], [c.l2_err for c in rows])
    for r in rs:
        rec.add(f"L{r}", [c.lr[r] for c in rows], [c.lr_err[r] for c in rows])
    return rec


# ---------------------------------------------------------------- exact evolution

@dataclass(frozen=True)
class CrossCheck:
    t: float
    r: int
    parametrix: float
    spectral: float

    @property
    def ratio(self):
        return self.spectral / self.parametrix


def spectral_crosscheck(scale: ScaleParams, Zs=(-0.25, 0.25, 2.0), rs=(6, 8), modes=None,
                        psi_halfwidth=1 / 16, points_per_wave=12):
    """Evolve (U, ∂ₜU) at t = 0 exactly in the gallery-mode basis and compare
    L^r norms with the parametrix sum at the times Z·2ca^{1/2} (Z = 2n
    is the centre of J_n)."""
    from .cusp_parametrix import sum_parametrix
    from .model_spectrum import ModeBasis, project, propagate, synthesize
    from .special_airy import airy_zero
    h, a = scale.h, scale.a
    kmax = 1 + 2 * psi_halfwidth
    x_max = a * (1 + 10 * scale.lam ** (-2 / 3))
    if modes is None:
        # modes whose turning point kmax^{2/3}x = ω_k lies inside [0, x_max]
        s_max = (kmax / h) ** (2 / 3) * x_max
        modes = int(np.searchsorted(airy_zero(np.arange(1, 4000)), s_max)) + 8
    nx = int(points_per_wave * (kmax / h) * x_max / (2 * np.pi) * 1.2) + 1
    x = np.linspace(0.0, x_max, nx)
    u0 = sum_parametrix(scale, 0.0, x=x, psi_halfwidth=psi_halfwidth)
    v0 = sum_parametrix(scale, 0.0, x=x, psi_halfwidth=psi_halfwidth, deriv="t",
                        period=u0.y_period)
    # ∂ₜ of the physical field, re-expressed as an envelope at the same carrier
    v0 = Field2D(v0.x, v0.y, v0.values, v0.wx, v0.wy, carrier=v0.carrier, y_ref=v0.y_ref,
                 y_period=v0.y_period)
    P = u0.y_period
    qmax = int(math.ceil(psi_halfwidth * P / (2 * np.pi * h))) + 1
    basis = ModeBasis.build(1 / h, P, np.arange(-qmax, qmax + 1), modes)
    state = project(u0, v0, basis)
    unit = 2 * scale.c * math.sqrt(a)
    out = []
    ny = sfft.next_fast_len((max(rs) // 2 + 1) * (2 * qmax + 1))
    for Z in Zs:
        t = Z * unit
        ref = sum_parametrix(scale, t, x=x, psi_halfwidth=psi_halfwidth, r_max=max(rs))
        ex = synthesize(propagate(state, t), x, ny=ny, y_center=float(np.mean(ref.y)))
        for r in rs:
            out.append(CrossCheck(t, r, lr_norm(ref, r), lr_norm(ex, r)))
    return out
