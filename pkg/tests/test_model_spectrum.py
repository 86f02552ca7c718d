import math

import numpy as np
import pytest

from cuspwave.model_spectrum import (
    GridMismatchError, ModeBasis, WaveState, dirichlet_ratio, eigenvalue, gallery_mode,
    make_field, periodic_grid, project, propagate, synthesize,
)
from cuspwave.special_airy import airy_zero

AI_ZERO_VALUE = 0.355028053887817


@pytest.fixture(scope="module")
def basis():
    return ModeBasis.build(carrier=20.0, period=2 * np.pi, q=np.arange(-3, 4), mode_count=6)


def random_state(basis, seed):
    rng = np.random.default_rng(seed)
    shape = (len(basis.eta_grid), basis.mode_count)
    pos = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    vel = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return WaveState(basis, pos, vel)


def x_grid(basis, n=4000):
    return np.linspace(0.0, basis.x_cutoff, n)


def test_gallery_mode_values():
    assert abs(gallery_mode(1.0, 1, 0.0)) < 1e-12
    assert abs(gallery_mode(3.0, 4, 0.0)) < 1e-12
    w1 = airy_zero(1)
    assert abs(gallery_mode(1.0, 1, w1) - AI_ZERO_VALUE) < 1e-12
    x = np.linspace(0, 2, 7)
    assert np.allclose(gallery_mode(5.0, 2, x), gallery_mode(1.0, 2, 5.0 ** (2 / 3) * x),
                       rtol=0, atol=1e-15)


def test_eigenvalue():
    assert abs(eigenvalue(1.0, 1) - 3.3381074105) < 1e-9
    eta, k = 40.0, 3
    a = airy_zero(k) * eta ** (-2 / 3)
    assert abs(math.sqrt(eigenvalue(eta, k)) - eta * math.sqrt(1 + a)) < 1e-12
    mus = [eigenvalue(2.0, k) for k in range(1, 6)]
    assert all(m > 0 for m in mus) and np.all(np.diff(mus) > 0)
    with pytest.raises(ValueError):
        eigenvalue(-1.0, 1)


def test_rayleigh_quotient_finite_difference():
    eta, k = 7.0, 2
    x = np.linspace(0, 6, 6001)
    dx = x[1] - x[0]
    u = gallery_mode(eta, k, x)
    uxx = np.zeros_like(u)
    uxx[2:-2] = (-u[4:] + 16 * u[3:-1] - 30 * u[2:-2] + 16 * u[1:-3] - u[:-4]) / (12 * dx * dx)
    Au = -uxx + (1 + x) * eta ** 2 * u
    rq = np.sum(u[2:-2] * Au[2:-2]) / np.sum(u[2:-2] ** 2)
    assert abs(rq / eigenvalue(eta, k) - 1) < 1e-6


def test_basis_orthonormal_and_dirichlet(basis):
    x = x_grid(basis, 20000)
    w = np.full(len(x), x[1] - x[0])
    w[[0, -1]] /= 2
    for j in (0, 3, 6):
        E = basis.modes(j, x)
        assert np.max(np.abs(E[0])) < 1e-12
        G = (E * w[:, None]).T @ E
        assert np.max(np.abs(G - np.eye(basis.mode_count))) < 1e-8
    assert np.all(np.diff(basis.mu, axis=1) > 0)


def single_mode_field(basis, j, k, ny=32):
    x = x_grid(basis)
    y = periodic_grid(0.0, basis.period, ny)
    eta = basis.eta_grid[j]
    vals = gallery_mode(eta, k, x)[:, None] * np.exp(1j * (eta - basis.carrier) * y)[None, :]
    return make_field(x, y, vals, periodic_y=True, carrier=basis.carrier)


def test_project_single_mode(basis):
    c = project(single_mode_field(basis, 2, 2), None, basis).pos
    expected = basis.norm_constants[2, 1]
    assert abs(c[2, 1] - expected) < 1e-8 * expected
    c[2, 1] = 0
    assert np.max(np.abs(c)) < 1e-8


def test_project_zero_field(basis):
    f = single_mode_field(basis, 0, 1)
    st = project(f.with_values(np.zeros_like(f.values)), None, basis)
    assert not np.any(st.pos) and not np.any(st.vel)


def test_round_trip(basis):
    st = random_state(basis, 1)
    x = x_grid(basis)
    pos = synthesize(st, x, ny=32)
    vel = synthesize(st, x, ny=32, velocity=True)
    back = project(pos, vel, basis)
    scale = np.max(np.abs(st.pos))
    assert np.max(np.abs(back.pos - st.pos)) < 1e-8 * scale
    assert np.max(np.abs(back.vel - st.vel)) < 1e-8 * scale


def test_grid_mismatch(basis):
    f = single_mode_field(basis, 0, 1)
    shifted = make_field(f.x + 0.1, f.y, f.values, periodic_y=True, carrier=f.carrier)
    with pytest.raises(GridMismatchError):
        project(shifted, None, basis)
    coarse = single_mode_field(basis, 0, 1, ny=4)
    with pytest.raises(GridMismatchError):
        project(coarse, None, basis)


def test_propagate_identity_and_period(basis):
    st = random_state(basis, 2)
    z = propagate(st, 0.0)
    assert np.array_equal(z.pos, st.pos) and np.array_equal(z.vel, st.vel)
    one = WaveState(basis, np.zeros_like(st.pos), np.zeros_like(st.vel))
    one.pos[1, 2] = 1.0
    T = 2 * np.pi / math.sqrt(basis.mu[1, 2])
    back = propagate(one, T)
    assert np.max(np.abs(back.pos - one.pos)) < 1e-12
    assert np.max(np.abs(back.vel)) < 1e-12 * math.sqrt(basis.mu[1, 2])


def test_energy_conservation(basis):
    st = random_state(basis, 3)
    e0 = st.energy()
    for t in np.linspace(0.1, 1.0, 10):
        assert abs(propagate(st, t).energy() / e0 - 1) < 1e-10


def test_group_law(basis):
    st = random_state(basis, 4)
    a = propagate(propagate(st, 0.37), 0.58)
    b = propagate(st, 0.95)
    scale = np.max(np.abs(st.pos))
    assert np.max(np.abs(a.pos - b.pos)) < 1e-10 * scale
    assert np.max(np.abs(a.vel - b.vel)) < 1e-10 * scale * np.sqrt(basis.mu.max())


def test_dirichlet_trace_of_synthesis(basis):
    st = propagate(random_state(basis, 5), 0.4)
    f = synthesize(st, x_grid(basis))
    assert dirichlet_ratio(f) < 1e-8


def test_travelling_mode_speed():
    # a gallery mode with η^{2/3}a = ω_k moves at (1+a)^{1/2}
    k, a = 1, 0.2
    eta = (airy_zero(k) / a) ** 1.5
    P = 2 * np.pi / eta * 40
    b = ModeBasis.build(carrier=eta, period=P, q=np.array([0]), mode_count=1)
    pos = np.array([[1.0 + 0j]])
    st = WaveState(b, pos, -1j * np.sqrt(b.mu) * pos)
    x = np.linspace(0, b.x_cutoff, 400)
    t = 0.5
    f0 = synthesize(st, x, ny=8)
    f1 = synthesize(propagate(st, t), x, ny=8)
    ratio = f1.physical() / f0.physical()
    assert np.allclose(ratio[f0.values.real != 0], np.exp(-1j * eta * math.sqrt(1 + a) * t))
