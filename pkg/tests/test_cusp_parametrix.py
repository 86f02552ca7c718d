import math
from dataclasses import replace

import numpy as np
import pytest

from cuspwave.billiard_maps import ScaleParams
from cuspwave.cusp_parametrix import (
    CuspSpec, active_cusps, boundary_defect, box_residual, caustic_contrast, eval_cusp,
    frequency_localization, general_cusp_eval, l2_plancherel, off_lagrangian_fraction, overlap,
    sum_parametrix, time_covariance, trace, trace_pairing, trace_t_grid,
)
from cuspwave.eikonal_jets import jet_recursion
from cuspwave.model_spectrum import ModeBasis, WaveState, propagate, synthesize
from cuspwave.norm_lab import fit_exponent

SMALL = ScaleParams(1e-3, 0.1, Y=64)
MID = ScaleParams(1e-4, 0.1, Y=64)


def tilted(y):
    return 1 + 0.05 * y


def test_spec_validation():
    with pytest.raises(ValueError):
        CuspSpec(SMALL.N + 1, SMALL)
    with pytest.raises(ValueError):
        CuspSpec(0, SMALL, psi_halfwidth=0.2)
    with pytest.raises(ValueError):
        CuspSpec(0, SMALL, seed_mode="other")
    sp = CuspSpec(2, SMALL)
    assert abs(sp.Z(sp.time(0.3)) - 0.3) < 1e-12
    assert abs(sp.shift - 8 / 3 * SMALL.a ** 1.5) < 1e-15


def test_eval_error_estimate():
    sp = CuspSpec(1, SMALL)
    f = eval_cusp(sp, t=sp.time(0.0), error=True, r_max=4)
    assert np.max(f.err) <= 1e-3 * np.max(np.abs(f.values))


def test_plancherel_matches_grid_norm():
    sp = CuspSpec(0, SMALL)
    f = eval_cusp(sp, t=0.0, r_max=4)
    assert abs(l2_plancherel(sp, 0.0, x=f.x) / f.l2() - 1) < 1e-10


def dirichlet_mismatch(spec, samples=13):
    """L² mismatch between u at x = 0 and Tr₊ + Tr₋ over the trace window."""
    ts = trace_t_grid(spec, spec.time(-1.4), spec.time(1.4))
    num = den = 0.0
    for t in ts[::max(1, len(ts) // samples)]:
        f = eval_cusp(spec, x=np.array([0.0]), t=t)
        s = f.y - spec.c * t
        P = f.meta["period"]
        tr = trace(spec, "+", [t], P).values(s) + trace(spec, "-", [t], P).values(s)
        phys = f.physical()[0]
        num += float(np.sum(np.abs(phys - tr[:, 0]) ** 2))
        den += float(np.sum(np.abs(phys) ** 2))
    return math.sqrt(num / den)


def test_boundary_value_is_sum_of_traces():
    # the two agree up to the part of ρⁿ outside the band where κ = 1,
    # which decays faster than any power of λ
    coarse = dirichlet_mismatch(CuspSpec(1, SMALL))
    fine = dirichlet_mismatch(CuspSpec(1, MID))
    assert fine < coarse
    assert fine < 1e-2


def test_caustic_concentration():
    sp = CuspSpec(0, ScaleParams(1e-4, 0.1))
    on, off = caustic_contrast(sp)
    assert on >= 3 * off


def test_time_translation_covariance():
    sp = CuspSpec(0, ScaleParams(1e-4, 0.1))
    assert time_covariance(sp, Z=0.0) <= 0.05


def test_trace_sign_symmetry():
    for n in (0, 1):
        sp = CuspSpec(n, SMALL)
        tp, tm = trace(sp, "+"), trace(sp, "-")
        assert abs(tp.l2() / tm.l2() - 1) < 0.02


def test_trace_pairing_small():
    for n in (0, 1):
        assert trace_pairing(CuspSpec(n, ScaleParams(1e-3, 0.1))) < 1e-3


def test_trace_amplitude_slope():
    hs = 2.0 ** -np.arange(10, 20)
    peaks = [trace(CuspSpec(0, ScaleParams(h, 0.1)), "+", stride=8).peak() for h in hs]
    slope, _ = fit_exponent(hs, peaks)
    eps = 0.1
    predicted = 1 / 3 - (1 / 6) * (3 * (1 - eps) / 4 - 1)
    assert abs(slope - predicted) <= 0.05


def test_sum_reduces_to_single_cusp():
    sc = ScaleParams(1e-4, 0.1)
    assert active_cusps(sc, 0.0) == [0, 1]
    U = sum_parametrix(sc, 0.0, r_max=4)
    u = eval_cusp(CuspSpec(0, sc), x=U.x, y=U.y, t=0.0)
    assert np.max(np.abs(U.values - u.values)) <= 1e-6 * np.max(np.abs(u.values))
    U0 = sum_parametrix(sc, 0.0, x=U.x, y=U.y, N=0)
    assert np.max(np.abs(U0.values - u.values)) <= 1e-12 * np.max(np.abs(u.values))
    with pytest.raises(ValueError):
        sum_parametrix(sc, -10.0)


def test_frequency_localization():
    U = sum_parametrix(SMALL, SMALL.interval(1)[0], r_max=4)
    assert frequency_localization(U, 2 / 16) >= 0.999


def test_disjoint_supports():
    sc = ScaleParams(1e-3, 0.1)
    assert overlap(CuspSpec(0, sc), CuspSpec(2, sc)) <= 1e-8
    assert overlap(CuspSpec(0, sc), CuspSpec(1, sc)) > 1e-3


def test_full_sum_dirichlet_defect_decays():
    eps, N = 0.2, 2
    lams, rel = [], []
    for h in (1e-8, 1e-9, 1e-10):
        q = h ** ((1 - eps) / 2) / 2
        Y = (4 * 2.5 * q ** 0.5) ** (4 / 3)
        sc = ScaleParams(h, eps, Y=Y)
        assert sc.N == N
        d = boundary_defect(sc, stride=4)
        lams.append(d.lam)
        rel.append(d.relative)
    assert np.polyfit(np.log(lams), np.log(rel), 1)[0] <= -2


def test_box_residual_transport_contrast():
    sp = CuspSpec(0, ScaleParams(1e-4, 0.1))
    c0 = sp.scale.c0
    good = box_residual(sp, sp.time(c0))
    bad = box_residual(replace(sp, seed_mode="frozen"), sp.time(c0))
    assert bad >= 10 * good


def test_box_residual_exact_solution_floor():
    h = 1e-2
    k = 1 / h
    b = ModeBasis.build(k, 2 * np.pi * h * 64, [0], 3)
    pos = np.array([[1.0, 0.5, 0.2]], dtype=complex)
    # velocity data making every mode a wave travelling in +y
    st = WaveState(b, pos, -1j * np.sqrt(b.mu) * pos)
    speed = math.sqrt(b.mu[0, 0]) / k
    x = np.linspace(0, 12 * k ** (-2 / 3), 400)

    def travelling(_x, _y, t):
        # re-reference the envelope to y = speed·t
        f = synthesize(propagate(st, t), x, ny=16)
        return replace(f, values=f.values * np.exp(1j * k * (speed * t - f.y_ref)), y_ref=speed * t)

    assert box_residual(travelling, 0.3) <= 1e-6


@pytest.mark.xfail(strict=True, reason="h‖□u‖/‖u‖ scales like h/a, so the fitted slope is "
                                       "about 0.45 rather than bounded; recorded in the ledger")
def test_box_residual_ladder_bounded():
    hs = 2.0 ** -np.arange(10, 16, 2)
    res = []
    for h in hs:
        sp = CuspSpec(0, ScaleParams(h, 0.1))
        res.append(box_residual(sp, sp.time(0.0)))
    slope = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert -0.1 <= slope <= 0.1


@pytest.fixture(scope="module")
def general_small():
    sc = ScaleParams(1e-3, 0.1, Y=16)
    sp = CuspSpec(0, sc)
    f = eval_cusp(sp, t=0.0, r_max=4)
    sel = np.nonzero(np.abs(f.y) < 0.9)[0]
    return sc, sp, f, sel


def test_general_flat_matches_model(general_small):
    sc, sp, f, sel = general_small
    jet = jet_recursion(None, 3, 1.0, -sc.c)
    g = general_cusp_eval(jet, sp, f.x, f.y[sel], 0.0)
    ref = f.values[:, sel]
    assert np.max(np.abs(g.values - ref)) <= 1e-4 * np.max(np.abs(ref))


def test_general_trace_comparable(general_small):
    sc, sp, _, _ = general_small
    t = sp.time(-1.0)
    x = np.array([0.0, 1e-5, 2e-5])
    fm = eval_cusp(sp, x=x, t=t, r_max=4)
    sel = np.nonzero(np.abs(fm.y) < 0.9)[0]
    jet = jet_recursion(tilted, 3, 1.0, -sc.c)
    g = general_cusp_eval(jet, sp, x, fm.y[sel], t)
    ratio = np.max(np.abs(g.values[0])) / np.max(np.abs(fm.values[0, sel]))
    assert 0.5 <= ratio <= 2
    with pytest.raises(ValueError):
        general_cusp_eval(jet_recursion(tilted, 3, 1.0, -1.0), sp, x, fm.y[sel], t)


def test_general_lagrangian_localization():
    sc = ScaleParams(1e-4, 0.1, Y=150)
    sp = CuspSpec(0, sc)
    f = eval_cusp(sp, t=0.0, r_max=4)
    y = f.y[np.nonzero(np.abs(f.y) < 0.9)[0][::2]]
    jet = jet_recursion(tilted, 3, 1.0, -sc.c)
    g = general_cusp_eval(jet, sp, f.x, y, 0.0)
    assert off_lagrangian_fraction(g, jet, width=3.0) <= 1e-3
