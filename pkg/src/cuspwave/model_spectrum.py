"""Gallery-mode eigenbasis and the exact Dirichlet propagator of the model
operator ∂²ₓ + (1+x)∂²_y on the half-plane x > 0.

A field on a y-window of period P is expanded as

    u(x, y) = Σ_{η, k} c_k(η) e_k(x; η) e^{iηy},

with e_k(·; η) = Ai(η^{2/3}x - ω_k)/‖Ai(η^{2/3}· - ω_k)‖ orthonormal on
(0, ∞) and η on the lattice carrier + 2πq/P.  Then ‖u‖² = P Σ|c|², and each
coefficient evolves as a harmonic oscillator with frequency √μ_k(η).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
import math

import numpy as np
from scipy import fft as sfft

from .special_airy import airy_ai, airy_zero


class GridMismatchError(ValueError):
    pass


# ---------------------------------------------------------------- fields

@dataclass(frozen=True)
class Field2D:
    """Complex samples on an (x, y) rectangle.

    The physical field is values·exp(i·carrier·(y - y_ref)); for fields
    that oscillate at frequency ~1/h in y only the slowly varying envelope
    is stored.  ``y_period`` is set when the y grid is one full period of a
    periodic window, in which case the y weights are uniform."""
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    carrier: float = 0.0
    y_ref: float = 0.0
    y_period: float | None = None
    err: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.values.shape != (len(self.x), len(self.y)):
            raise GridMismatchError("values must have shape (len(x), len(y))")
        if np.any(np.diff(self.x) <= 0) or np.any(np.diff(self.y) <= 0):
            raise GridMismatchError("grids must be strictly increasing")
        if np.any(self.wx <= 0) or np.any(self.wy <= 0):
            raise GridMismatchError("weights must be positive")

    @property
    def weights(self):
        return np.outer(self.wx, self.wy)

    def physical(self):
        """Values including the carrier oscillation."""
        return self.values * np.exp(1j * self.carrier * (self.y - self.y_ref))[None, :]

    def l2(self):
        return math.sqrt(float(np.sum(self.weights * np.abs(self.values) ** 2)))

    def with_values(self, values, **kw):
        return replace(self, values=values, **kw)


def trapezoid_weights(x):
    x = np.asarray(x, dtype=float)
    if len(x) == 1:
        return np.ones(1)
    d = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def make_field(x, y, values, periodic_y=False, **kw):
    """Field2D with trapezoid x weights and trapezoid or periodic y weights."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if periodic_y:
        dy = y[1] - y[0]
        wy = np.full(len(y), dy)
        kw.setdefault("y_period", dy * len(y))
    else:
        wy = trapezoid_weights(y)
    return Field2D(x, y, np.asarray(values, dtype=complex), trapezoid_weights(x), wy, **kw)


def periodic_grid(center, period, n):
    """n points covering one period, symmetric about center."""
    return center + (np.arange(n) - n // 2) * (period / n)


# ---------------------------------------------------------------- modes

def gallery_mode(eta, k, x):
    """Ai(η^{2/3}x - ω_k), without the e^{iyη} factor."""
    if eta <= 0:
        raise ValueError("η must be positive")
    return airy_ai(eta ** (2 / 3) * np.asarray(x, dtype=float) - airy_zero(k)).ai


def eigenvalue(eta, k):
    """μ_k(η) = η² + ω_k η^{4/3}."""
    if np.any(np.asarray(eta) <= 0):
        raise ValueError("η must be positive")
    return np.asarray(eta) ** 2 + airy_zero(k) * np.asarray(eta) ** (4 / 3)


@lru_cache(maxsize=4)
def _airy_table(smin, smax, step):
    s = np.arange(smin, smax + step, step)
    v = airy_ai(s)
    return s, v.ai, v.ai_prime


def _airy_interp(s, table):
    """Cubic Hermite interpolation of Ai from tabulated Ai and Ai'."""
    ts, ta, tp = table
    step = ts[1] - ts[0]
    q = (s - ts[0]) / step
    i = np.clip(np.floor(q).astype(int), 0, len(ts) - 2)
    u = q - i
    h00 = (1 + 2 * u) * (1 - u) ** 2
    h10 = u * (1 - u) ** 2
    h01 = u * u * (3 - 2 * u)
    h11 = u * u * (u - 1)
    return h00 * ta[i] + h10 * step * tp[i] + h01 * ta[i + 1] + h11 * step * tp[i + 1]


TABLE_STEP = 1.0 / 1024


@dataclass(frozen=True)
class ModeBasis:
    """Gallery modes for tangential frequencies eta_grid = carrier + 2πq/period."""
    eta_grid: np.ndarray
    mode_count: int
    zeros: np.ndarray
    norm_constants: np.ndarray
    x_cutoff: float
    period: float
    carrier: float
    q: np.ndarray

    @classmethod
    def build(cls, carrier, period, q, mode_count):
        q = np.asarray(q, dtype=int)
        eta = carrier + 2 * np.pi * q / period
        if np.any(eta <= 0):
            raise ValueError("all tangential frequencies must be positive")
        zeros = np.asarray(airy_zero(np.arange(1, mode_count + 1)))
        aip = airy_ai(-zeros).ai_prime
        # ∫_0^∞ Ai(η^{2/3}x - ω)² dx = η^{-2/3} Ai'(-ω)²
        norms = np.sqrt(eta[:, None] ** (-2 / 3) * aip[None, :] ** 2)
        xcut = 2 * zeros[-1] * eta.min() ** (-2 / 3) + 10 * eta.max() ** (-2 / 3)
        return cls(eta, int(mode_count), zeros, norms, float(xcut), float(period),
                   float(carrier), q)

    @property
    def mu(self):
        return self.eta_grid[:, None] ** 2 + self.zeros[None, :] * self.eta_grid[:, None] ** (4 / 3)

    def _table(self, x):
        smax = self.eta_grid.max() ** (2 / 3) * max(float(np.max(x)), 0.0) + 1.0
        smin = -self.zeros[-1] - 1.0
        smin = math.floor(smin)
        smax = min(math.ceil(smax), 150.0)
        return _airy_table(float(smin), float(smax), TABLE_STEP)

    def modes(self, j, x, table=None):
        """Orthonormal modes e_k(x; η_j), shape (len(x), K)."""
        x = np.asarray(x, dtype=float)
        table = self._table(x) if table is None else table
        s = self.eta_grid[j] ** (2 / 3) * x[:, None] - self.zeros[None, :]
        vals = np.where(s < table[0][-1], _airy_interp(np.minimum(s, table[0][-1]), table), 0.0)
        return vals / self.norm_constants[j][None, :]


@dataclass(frozen=True)
class WaveState:
    """Coefficients of u and ∂ₜu in the basis, at time t."""
    basis: ModeBasis
    pos: np.ndarray
    vel: np.ndarray
    t: float = 0.0

    def energy(self):
        """Σ P(|vel|² + μ|pos|²), conserved by propagate."""
        P = self.basis.period
        return float(P * np.sum(np.abs(self.vel) ** 2 + self.basis.mu * np.abs(self.pos) ** 2))

    def l2(self):
        return math.sqrt(self.basis.period * float(np.sum(np.abs(self.pos) ** 2)))


def _dft_in_y(field: Field2D, basis: ModeBasis):
    """Fourier coefficients (1/P)∫u e^{-iηy}dy at the basis frequencies."""
    P = field.y_period
    if P is None or abs(P - basis.period) > 1e-9 * basis.period:
        raise GridMismatchError("field y-window must be one period of the basis")
    dq = (field.carrier - basis.carrier) * P / (2 * np.pi)
    if abs(dq - round(dq)) > 1e-6:
        raise GridMismatchError("field carrier is not on the basis frequency lattice")
    ny = len(field.y)
    F = sfft.fft(field.values, axis=1) / ny
    q = basis.q - int(round(dq))
    if np.any(np.abs(q) >= ny // 2):
        raise GridMismatchError("y grid too coarse for the basis frequencies")
    y0 = field.y[0]
    # u = V e^{iκ(y-y_ref)}; shift the DFT to absolute frequencies
    phase = np.exp(1j * field.carrier * (y0 - field.y_ref) - 1j * basis.eta_grid * y0)
    return F[:, q % ny] * phase[None, :]


def project(field_pos: Field2D, field_vel: Field2D | None, basis: ModeBasis, t=0.0) -> WaveState:
    """Expand (u, ∂ₜu) in the basis: DFT in y, weighted inner products in x."""
    if field_vel is not None and (field_vel.values.shape != field_pos.values.shape
                                  or not np.allclose(field_vel.x, field_pos.x)):
        raise GridMismatchError("position and velocity fields must share grids")
    x = field_pos.x
    if x[0] > 1e-12:
        raise GridMismatchError("x grid must start at the boundary x = 0")
    table = basis._table(x)
    out = []
    for fld in (field_pos, field_vel):
        if fld is None:
            out.append(np.zeros((len(basis.eta_grid), basis.mode_count), dtype=complex))
            continue
        F = _dft_in_y(fld, basis)
        c = np.empty((len(basis.eta_grid), basis.mode_count), dtype=complex)
        for j in range(len(basis.eta_grid)):
            E = basis.modes(j, x, table)
            c[j] = (fld.wx * F[:, j]) @ E
        out.append(c)
    return WaveState(basis, out[0], out[1], float(t))


def propagate(state: WaveState, t) -> WaveState:
    """Exact evolution to time state.t + t of every mode."""
    w = np.sqrt(state.basis.mu)
    c, s = np.cos(w * t), np.sin(w * t)
    pos = c * state.pos + s / w * state.vel
    vel = -w * s * state.pos + c * state.vel
    return WaveState(state.basis, pos, vel, state.t + t)


def synthesize(state: WaveState, x, ny=None, y_center=0.0, velocity=False) -> Field2D:
    """Field on x and one y period, stored as an envelope at the basis carrier."""
    b = state.basis
    x = np.asarray(x, dtype=float)
    coef = state.vel if velocity else state.pos
    qspan = int(np.max(np.abs(b.q))) + 1
    ny = ny or sfft.next_fast_len(4 * qspan + 2)
    if ny <= 2 * np.max(np.abs(b.q)):
        raise GridMismatchError("y grid too coarse for the basis frequencies")
    y = periodic_grid(y_center, b.period, ny)
    table = b._table(x)
    y0 = y[0]
    spec = np.zeros((len(x), ny), dtype=complex)
    for j in range(len(b.eta_grid)):
        spec[:, b.q[j] % ny] += (b.modes(j, x, table) @ coef[j]) * np.exp(1j * b.eta_grid[j] * y0)
    # envelope referenced to y0: V_l = Σ_q A_q e^{iη_q y0} e^{2πiql/ny}
    vals = sfft.ifft(spec, axis=1) * ny
    return make_field(x, y, vals, periodic_y=True, carrier=b.carrier, y_ref=y0,
                      y_period=b.period)


def dirichlet_ratio(field: Field2D):
    """‖u(0, ·)‖ / ‖u‖ for a field whose x grid starts at 0."""
    if field.x[0] != 0:
        raise GridMismatchError("x grid must start at 0")
    edge = math.sqrt(float(np.sum(field.wy * np.abs(field.values[0]) ** 2)))
    return edge / field.l2()
