import math

import numpy as np
import pytest
from scipy.optimize import brentq

from cuspwave.eikonal_jets import (
    JetError, caustic, friedlander_phase, jet_recursion, theta0, zeta0, zeta1,
)


def tilted(y):
    return 1 + 0.05 * y


def wavy(y):
    return 1 + 0.05 * np.sin(y)


def complex_step(f, x, y, axis, h=1e-20):
    if axis == "x":
        return np.imag(f(x + 1j * h, y)) / h
    return np.imag(f(x, y + 1j * h)) / h


def eikonal_residual(jet, b, x, y):
    """Both equations of the eikonal system evaluated with complex-step derivatives."""
    th, ze = jet.theta, jet.zeta
    tx, ty = complex_step(th, x, y, "x"), complex_step(th, x, y, "y")
    zx, zy = complex_step(ze, x, y, "x"), complex_step(ze, x, y, "y")
    g = 1 + x * b(y)
    z = np.real(ze(x, y))
    e1 = tx ** 2 + g * ty ** 2 - jet.tau ** 2 - z * (zx ** 2 + g * zy ** 2)
    e2 = tx * zx + g * ty * zy
    return abs(e1) + abs(e2)


def test_friedlander_phase():
    assert friedlander_phase(0, 0, 0, 1.0, -1.0) == (0.0, 0.0)
    eta, tau = 1.3, -1.5
    xc = (tau ** 2 - eta ** 2) / eta ** 2
    assert abs(friedlander_phase(xc, 0.2, 0.1, eta, tau)[1]) < 1e-15


def test_friedlander_eikonal_residual():
    eta, tau = 1.0, -1.1
    d = 1e-5

    def phi(x, y, t, sign):
        th, ze = friedlander_phase(x, y, t, eta, tau)
        return th - sign * (2 / 3) * (-ze) ** 1.5

    for sign in (1, -1):
        for x in (0.02, 0.1, 0.15):
            px = (phi(x + d, 0, 0, sign) - phi(x - d, 0, 0, sign)) / (2 * d)
            py = (phi(x, d, 0, sign) - phi(x, -d, 0, sign)) / (2 * d)
            pt = (phi(x, 0, d, sign) - phi(x, 0, -d, sign)) / (2 * d)
            assert abs(px ** 2 + (1 + x) * py ** 2 - pt ** 2) < 1e-8


def test_zeta1_glancing_values():
    assert zeta1(0.0, 1.0, -1.0) == 1.0
    assert abs(zeta1(1.0, 1.0, -1.0, tilted) - 1.05 ** (1 / 3)) < 1e-15
    assert abs(1.05 ** (1 / 3) - 1.01639635681) < 1e-10


def test_zeta1_correction_against_cubic():
    tau = -math.sqrt(1.001)
    z0 = zeta0(1.0, tau)
    y = 0.3
    glancing = jet_recursion(tilted, 3, 1.0, -1.0, window=(-0.5, 1.0))
    z2 = float(glancing.zeta_coefficient(2, y))
    bv = tilted(y)
    ref = brentq(lambda z: z ** 3 - bv * tau ** 2 - z0 * (bv * z * z - 2 * z * z2), 0.5, 1.5,
                 xtol=1e-16, rtol=1e-15)
    got = zeta1(y, 1.0, tau, tilted)
    assert abs(got - ref) < 1e-12
    base = np.cbrt(bv)
    assert 0 < abs(got - base) < 1e-3


def test_zeta1_radius():
    with pytest.raises(JetError):
        zeta1(0.0, 1.0, -math.sqrt(1.3))
    with pytest.raises(JetError):
        zeta1(0.0, 1.0, -1.0, lambda y: 1.5 + 0 * y)


def test_theta0_flat_and_glancing():
    y = np.linspace(-0.8, 0.8, 9)
    vals, slope = theta0(y, 1.2, -1.23, t=0.3)
    assert np.max(np.abs(vals - (1.2 * y - 0.3 * 1.23))) < 1e-13
    assert np.max(np.abs(slope - 1.2)) < 1e-13
    _, slope = theta0(y, 1.0, -1.0, tilted)
    assert np.max(np.abs(slope - 1.0)) < 1e-15


@pytest.mark.parametrize("a", [1e-2, 1e-3])
def test_mixed_derivatives(a):
    y = np.array([-0.5, 0.0, 0.5, 1.0])
    tau, d = -math.sqrt(1 + a), 1e-5
    z0 = abs(zeta0(1.0, tau))

    def slope(eta, t):
        return theta0(y, eta, t, tilted)[1]

    d_eta = (slope(1 + d, tau) - slope(1 - d, tau)) / (2 * d)
    d_tau = (slope(1.0, tau + d) - slope(1.0, tau - d)) / (2 * d)
    assert np.all(np.abs(d_eta - tilted(y) ** (2 / 3)) <= 2 * z0)
    assert np.all(np.abs(d_tau - (tilted(y) ** (2 / 3) - 1)) <= 2 * z0)


def test_theta0_homogeneity():
    y = np.linspace(-0.5, 0.5, 5)
    base = theta0(y, 1.0, -1.02, tilted)[0]
    for s in (0.5, 2.0):
        assert np.max(np.abs(theta0(y, s, -1.02 * s, tilted)[0] - s * base)) < 1e-12
        assert abs(zeta0(s, -1.02 * s) - s ** (2 / 3) * zeta0(1.0, -1.02)) < 1e-15


def test_flat_jet_reduces_to_friedlander():
    for tau in (-1.0, -1.03):
        jet = jet_recursion(None, 6, 1.0, tau)
        y = np.linspace(-1, 1, 11)
        for j in range(1, 7):
            assert np.max(np.abs(jet.theta_coefficient(j, y))) < 1e-13
        assert np.max(np.abs(jet.zeta_coefficient(1, y) - 1.0)) < 1e-13
        for j in range(2, 7):
            assert np.max(np.abs(jet.zeta_coefficient(j, y))) < 1e-13
        x = np.array([0.0, 0.05, 0.2])
        th, ze = friedlander_phase(x, 0.4, 0.0, 1.0, tau)
        assert np.max(np.abs(jet.zeta(x, 0.4) - ze)) < 1e-13
        assert np.max(np.abs(jet.theta(x, 0.4) - th)) < 1e-13


def test_theta1_vanishes():
    jet = jet_recursion(wavy, 4, 1.0, -1.01)
    y = np.linspace(-1, 1, 21)
    assert np.max(np.abs(jet.theta_coefficient(1, y))) < 1e-13
    assert np.all(jet.zeta_coefficient(1, y) > 0)


@pytest.mark.parametrize("J,tau", [(2, -1.0), (3, -1.0), (4, -1.0), (2, -math.sqrt(1.001))])
def test_residual_scales_like_power(J, tau):
    jet = jet_recursion(wavy, J, 1.0, tau)
    xs = np.array([1e-3, 3e-3, 1e-2, 3e-2, 1e-1])
    scaled = np.array([eikonal_residual(jet, wavy, x, 0.3) for x in xs]) / xs ** J
    assert scaled.max() / scaled.min() < 3


def test_recursion_guards():
    with pytest.raises(JetError):
        jet_recursion(None, 7, 1.0, -1.0)
    with pytest.raises(JetError):
        jet_recursion(lambda y: 1.5 + 0 * y, 2, 1.0, -1.0)
    with pytest.raises(JetError):
        jet_recursion(lambda y: 1.05 + 0 * y, 2, 1.0, -1.0)


def test_caustic():
    tau = -math.sqrt(1.01)
    flat = jet_recursion(None, 4, 1.0, tau)
    assert abs(caustic(0.2, 1.0, tau, flat) - 0.01) < 1e-15
    jet = jet_recursion(tilted, 4, 1.0, tau, window=(-1.0, 1.5))
    x = caustic(1.0, 1.0, tau, jet)
    assert abs(x - 9.8388e-3) < 1e-4
    assert abs(jet.zeta(x, 1.0)) < 1e-10
    with pytest.raises(JetError):
        caustic(0.0, 1.0, -1.0, jet_recursion(None, 2, 1.0, -1.0))


def test_jet_csv(tmp_path):
    jet = jet_recursion(tilted, 2, 1.0, -1.0)
    path = tmp_path / "jet.csv"
    jet.to_csv(path, np.linspace(-1, 1, 5))
    rows = path.read_text().splitlines()
    assert rows[0].split(",") == ["y", "theta0", "dtheta0", "theta1", "zeta1", "theta2", "zeta2"]
    assert len(rows) == 6
