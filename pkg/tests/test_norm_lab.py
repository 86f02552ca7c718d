import math

import numpy as np
import pytest
from scipy import integrate, special

from cuspwave.billiard_maps import ScaleParams
from cuspwave.cusp_parametrix import CuspSpec
from cuspwave.model_spectrum import ModeBasis, WaveState, make_field, periodic_grid, synthesize
from cuspwave.norm_lab import (
    AdmissiblePair, DegenerateLadderError, LadderRecord, LossRegimeError, UndersamplingError,
    beta_loss, cusp_norms, fit_exponent, free_space_exponent, h_ladder, l2_slope_prediction,
    loss_exponent, lr_norm, lr_slope_prediction, mixed_norm, quotient_slope_prediction,
    sobolev_norm, window_times,
)
from cuspwave.special_airy import airy_zero


def test_exponent_arithmetic():
    assert abs(beta_loss(6) - 37 / 72) < 1e-15
    assert loss_exponent(4) == 0
    assert abs(beta_loss(64) - 0.765625) < 1e-15
    assert abs(free_space_exponent(64) - 0.7265625) < 1e-15
    assert abs(loss_exponent(64) - 0.0390625) < 1e-15
    with pytest.raises(LossRegimeError):
        beta_loss(4)
    assert abs(lr_slope_prediction(6) - 0.6111111) < 1e-6
    assert abs(lr_slope_prediction(64) - 0.359375) < 1e-12
    assert abs(l2_slope_prediction(0.1) - 1.1125) < 1e-15
    assert abs(quotient_slope_prediction(64, 0.02) - (-beta_loss(64) + 0.02 / 8)) < 1e-15


def test_admissible_pair():
    p = AdmissiblePair.from_r(6)
    assert abs(2 / p.q + 1 / p.r - 0.5) < 1e-12
    assert abs(p.gamma - (1 - 2 / 6 - 1 / p.q)) < 1e-15
    with pytest.raises(ValueError):
        AdmissiblePair(2.0, math.inf)
    with pytest.raises(ValueError):
        AdmissiblePair(5.0, 6.0)


def test_lr_norm_constant():
    x = np.linspace(0, 1, 11)
    y = np.linspace(0, 1, 13)
    f = make_field(x, y, np.ones((11, 13)))
    for r in (2, 6, 64):
        assert abs(lr_norm(f, r) - 1) < 1e-14
    with pytest.raises(ValueError):
        lr_norm(f, 1)


def test_lr_ratio_of_gallery_mode():
    eta, k, P = 50.0, 2, 1.0
    w = airy_zero(k)
    c = eta ** (2 / 3)
    xmax = (w + 12) / c
    x = np.linspace(0, xmax, 40001)
    y = periodic_grid(0.0, P, 16)
    u = special.airy(c * x - w)[0]
    f = make_field(x, y, u[:, None] * np.exp(2j * np.pi * 3 * y)[None, :], periodic_y=True)
    got = lr_norm(f, 4) / lr_norm(f, 2)
    i2 = integrate.quad(lambda s: special.airy(s)[0] ** 2, -w, 12, limit=200, epsabs=0, epsrel=1e-13)[0]
    i4 = integrate.quad(lambda s: special.airy(s)[0] ** 4, -w, 12, limit=200, epsabs=0, epsrel=1e-13)[0]
    ref = (P * i4 / c) ** 0.25 / (P * i2 / c) ** 0.5
    assert abs(got / ref - 1) < 1e-6


def test_l64_approximates_max():
    x = np.linspace(-5, 5, 801)
    f = make_field(x, x, np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / 2))
    assert abs(lr_norm(f, 64) - 1) < 0.05


def test_lr_error_estimate():
    x = np.linspace(0, 1, 101)
    f = make_field(x, x, np.exp(x)[:, None] * np.exp(-x)[None, :])
    val, err = lr_norm(f, 6, error=True)
    assert 0 < err < 1e-3 * val


def test_mixed_norm_constant_in_time():
    x = np.linspace(0, 1, 21)
    f = make_field(x, x, 2 * np.ones((21, 21)))
    t = np.linspace(0, 3, 31)
    got = mixed_norm([f] * len(t), q=4, r=6, times=t)
    assert abs(got - 3 ** 0.25 * 2) < 1e-12


def synthetic_windows(N, width=1.0, period=4.0, per_window=16, level=2.0):
    """Norm envelopes that dip slightly towards the window edges."""
    windows = [(k * period, k * period + width) for k in range(N)]
    ts = window_times(windows, per_window)
    vals = [level * (1 - 0.1 * (2 * (t - lo) / width - 1) ** 2) for t, (lo, _) in zip(ts, windows)]
    return windows, np.concatenate(vals)


def test_mixed_norm_window_pattern():
    q, N = 6, 5
    windows, vals = synthetic_windows(N)
    got = mixed_norm(vals, q, windows=windows)
    pattern = (sum(hi - lo for lo, hi in windows) * 2.0 ** q) ** (1 / q)
    assert abs(got / pattern - 1) < 0.10
    single = mixed_norm(vals[:16], q, windows=windows[:1])
    assert abs(got / single / N ** (1 / q) - 1) < 0.2


def test_mixed_norm_undersampling():
    windows, vals = synthetic_windows(2, per_window=6)
    with pytest.raises(UndersamplingError):
        mixed_norm(vals, 4, windows=windows)
    ts = window_times([(0.0, 1.0)], 10)[0]
    with pytest.raises(UndersamplingError):
        mixed_norm(np.cos(30 * ts) ** 2 + 0.1, 4, windows=[(0.0, 1.0)])
    t = np.linspace(0, 1, 9)
    with pytest.raises(UndersamplingError):
        mixed_norm(np.cos(40 * t) ** 2 + 0.01, 2, times=t)


def test_sobolev_norm_parseval_and_single_mode():
    b = ModeBasis.build(carrier=30.0, period=2 * np.pi, q=np.arange(-2, 3), mode_count=4)
    rng = np.random.default_rng(7)
    pos = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
    st = WaveState(b, pos, np.zeros_like(pos))
    f = synthesize(st, np.linspace(0, b.x_cutoff, 6000), ny=16)
    assert abs(sobolev_norm(st, 0) / f.l2() - 1) < 1e-8
    one = np.zeros_like(pos)
    one[1, 2] = b.norm_constants[1, 2]
    s1 = WaveState(b, one, np.zeros_like(pos))
    for s in (-1, 0.5, 1):
        ref = math.sqrt(b.period) * b.mu[1, 2] ** (s / 2) * b.norm_constants[1, 2]
        assert abs(sobolev_norm(s1, s) / ref - 1) < 1e-14
    with pytest.raises(ValueError):
        sobolev_norm(st, 3)


def test_negative_sobolev_slope():
    hs = h_ladder(1e-2, 1e-5, 8)
    ratios = []
    for h in hs:
        b = ModeBasis.build(carrier=1 / h, period=2 * np.pi, q=np.arange(-2, 3), mode_count=3)
        pos = np.zeros((5, 3), dtype=complex)
        pos[:, :] = 1.0
        st = WaveState(b, pos, np.zeros_like(pos))
        ratios.append(sobolev_norm(st, -1) / sobolev_norm(st, 0))
    assert max(ratios / hs) < 1.0
    slope, _ = fit_exponent(hs, ratios)
    assert abs(slope - 1) < 0.05


def test_fit_exponent_synthetic():
    h = np.geomspace(1e-2, 1e-5, 10)
    slope, se = fit_exponent(h, 3 * h ** 0.7)
    assert abs(slope - 0.7) < 1e-12 and se <= 0.005
    rng = np.random.default_rng(11)
    noisy = 3 * h ** 0.7 * (1 + 0.05 * rng.standard_normal(len(h)))
    slope, se = fit_exponent(h, noisy, 0.05 * noisy)
    assert abs(slope - 0.7) < 0.02


def test_fit_exponent_degenerate():
    with pytest.raises(DegenerateLadderError):
        fit_exponent(np.geomspace(1e-2, 1e-5, 5), np.ones(5))
    with pytest.raises(DegenerateLadderError):
        fit_exponent(np.geomspace(1e-2, 1e-3, 8), np.ones(8))
    with pytest.raises(DegenerateLadderError):
        h_ladder(1e-2, 1e-3, 1)


def test_ladder_record_round_trip(tmp_path):
    scales = [ScaleParams(h, 0.1) for h in h_ladder(2 ** -10, 2 ** -13, 4)]
    rec = LadderRecord.from_scales(scales, eps=0.1)
    rec.add("L2", [1.0, 0.5, 0.25, 0.125], [1e-4, 1e-4, 1e-4, 1e-4])
    rec.add("L6", [2.0, 1.5, 1.0, 0.5])
    back = LadderRecord.from_bytes(rec.to_bytes())
    assert np.array_equal(back.h, rec.h) and np.array_equal(back.norms["L6"], rec.norms["L6"])
    assert rec.to_bytes()[:9] == b"CWLADDER\x01"
    text = rec.to_csv(tmp_path / "ladder.csv")
    assert text.splitlines()[0] == "h,a,lambda,N,L2,L2_err,L6,L6_err"
    assert "\r" not in (tmp_path / "ladder.csv").read_bytes().decode()
    assert rec.check_errors("L2")
    with pytest.raises(ValueError):
        LadderRecord.from_bytes(b"XXXXXXXX" + rec.to_bytes()[8:])


@pytest.fixture(scope="module")
def norms_small():
    spec = CuspSpec(0, ScaleParams(2 ** -12, 0.1))
    return {M: cusp_norms(spec, rs=(6, 64), M=M) for M in (2, 4, 8)}


def test_cusp_norm_regimes(norms_small):
    for M, cn in norms_small.items():
        for r in (6, 64):
            gal, inner, outer = cn.regime[r]
            assert abs(gal + inner + outer - 1) < 1e-12
            assert outer <= 1e-3
    # a wider gallery zone holds more of the mass
    assert norms_small[2].regime[6][0] < norms_small[4].regime[6][0] < norms_small[8].regime[6][0]
    # norms themselves do not depend on M
    assert norms_small[2].lr[6] == norms_small[8].lr[6]


def test_cusp_norm_errors(norms_small):
    cn = norms_small[4]
    assert cn.l2_err < 1e-3 * cn.l2
    for r in (6, 64):
        assert cn.lr_err[r] < 1e-3 * cn.lr[r]
