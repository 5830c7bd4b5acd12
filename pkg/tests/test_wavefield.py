import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import laplace_dno
from stokeswaves import (
    DomainError,
    ExpansionDivergenceError,
    GridTooSmallError,
    PhysicalParams,
    SpectralGrid,
    SurfaceState,
    dno_apply,
    flat_dno_apply,
    hamiltonian,
    hamiltonian_wahlen,
    linearized_apply,
    momentum,
    residual,
    wahlen_backward,
    wahlen_forward,
)
from stokeswaves.wavefield import (
    ddx,
    decay_rate,
    dno_collocation,
    dno_terms,
    inner,
    linear_symbols,
    time_derivative,
    to_coef,
    to_grid,
)

DEEP = PhysicalParams(1.0, math.inf, 0.3, 0.0)
SHALLOW = PhysicalParams(1.3, 1.2, 0.4, 0.9)


def smooth(rng, n, size, decay=0.5, mean=True):
    k = np.arange(n + 1)
    c = (rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)) * np.exp(-decay * k)
    c[0] = c[0].real if mean else 0.0
    return c * size / math.sqrt(inner(c, c))


def state(rng, n, size):
    return SurfaceState(smooth(rng, n, size), smooth(rng, n, size, mean=False))


def test_grid_validation():
    with pytest.raises(GridTooSmallError):
        SpectralGrid(0)
    with pytest.raises(GridTooSmallError):
        SpectralGrid(16, 40)
    assert SpectralGrid(16).n_collocation == 64


def test_state_validation():
    with pytest.raises(DomainError):
        SurfaceState(np.zeros(4), np.zeros(5))
    with pytest.raises(DomainError):
        SurfaceState(np.array([0, np.nan, 0]), np.zeros(3))


def test_grid_round_trip():
    rng = np.random.default_rng(0)
    c = smooth(rng, 12, 1.0)
    np.testing.assert_allclose(to_coef(to_grid(c, 48), 12), c, atol=1e-15)


def test_flat_dno_symbol():
    psi = np.zeros(6, dtype=complex)
    psi[3] = 1.0
    assert flat_dno_apply(DEEP, None, psi)[3] == pytest.approx(3.0)
    assert flat_dno_apply(SHALLOW, None, psi)[3] == pytest.approx(3 * math.tanh(3 * 1.2))


@pytest.mark.parametrize("params", [DEEP, SHALLOW])
def test_dno_matches_laplace_oracle(params):
    rng = np.random.default_rng(1)
    grid = SpectralGrid(24)
    for _ in range(3):
        eta = smooth(rng, 24, 0.03)
        psi = smooth(rng, 24, 1.0)
        np.testing.assert_allclose(dno_apply(params, grid, eta, psi), laplace_dno(params.depth, eta, psi), atol=1e-11)
        np.testing.assert_allclose(dno_collocation(params, eta, psi), laplace_dno(params.depth, eta, psi), atol=1e-11)


def test_dno_flat_surface_is_the_multiplier():
    rng = np.random.default_rng(2)
    psi = smooth(rng, 16, 1.0)
    grid = SpectralGrid(16)
    np.testing.assert_allclose(dno_apply(SHALLOW, grid, np.zeros(17), psi), flat_dno_apply(SHALLOW, grid, psi))


def test_dno_terms_shrink_geometrically():
    rng = np.random.default_rng(3)
    terms = dno_terms(DEEP, smooth(rng, 16, 0.02), smooth(rng, 16, 1.0), 8)
    sizes = [np.abs(t).max() for t in terms]
    assert all(b < a for a, b in zip(sizes[1:-1], sizes[2:]))


def test_dno_diverges_on_steep_surface():
    eta = np.zeros(17, dtype=complex)
    eta[1] = 0.6
    psi = np.zeros(17, dtype=complex)
    psi[1] = 1.0
    with pytest.raises(ExpansionDivergenceError):
        dno_apply(DEEP, SpectralGrid(16), eta, psi)


@given(st.integers(0, 2**32 - 1))
def test_dno_self_adjoint_and_mean_free(seed):
    rng = np.random.default_rng(seed)
    grid = SpectralGrid(16)
    eta = smooth(rng, 16, 0.02)
    a, b = smooth(rng, 16, 1.0), smooth(rng, 16, 1.0)
    ga, gb = dno_apply(SHALLOW, grid, eta, a), dno_apply(SHALLOW, grid, eta, b)
    assert abs(inner(ga, b) - inner(a, gb)) < 1e-12
    assert abs(ga[0]) < 1e-14
    assert inner(ga, a) >= -1e-14


def test_wahlen_round_trip():
    rng = np.random.default_rng(4)
    grid = SpectralGrid(16)
    eta, psi = smooth(rng, 16, 0.05), smooth(rng, 16, 0.05, mean=False)
    back_eta, back_psi = wahlen_backward(SHALLOW, grid, wahlen_forward(SHALLOW, grid, eta, psi))
    np.testing.assert_allclose(back_eta, eta, atol=1e-16)
    np.testing.assert_allclose(back_psi, psi, atol=1e-16)


def test_hamiltonian_agrees_across_variables():
    rng = np.random.default_rng(5)
    grid = SpectralGrid(16)
    eta, psi = smooth(rng, 16, 0.03, mean=False), smooth(rng, 16, 0.03, mean=False)
    u = wahlen_forward(SHALLOW, grid, eta, psi)
    assert hamiltonian_wahlen(SHALLOW, grid, u) == pytest.approx(hamiltonian(SHALLOW, grid, eta, psi), rel=1e-13)


def test_quadratic_energy_of_a_linear_mode():
    # H = pi (g + kappa) |eta_1|^2 * 2 + pi |psi_1|^2 * 2 for eta, psi on mode 1
    grid = SpectralGrid(8)
    eta, psi = np.zeros(9, dtype=complex), np.zeros(9, dtype=complex)
    eta[1], psi[1] = 1e-7, 1e-7j
    expected = math.pi * (DEEP.g + DEEP.kappa) * 2e-14 + math.pi * 2e-14
    assert hamiltonian(DEEP, grid, eta, psi) == pytest.approx(expected, rel=1e-6)


def test_residual_is_symplectic_gradient():
    rng = np.random.default_rng(6)
    grid = SpectralGrid(12)
    u = state(rng, 12, 0.02)
    c = 0.7
    f = residual(SHALLOW, grid, c, u)
    flow = SurfaceState(f.eta - c * ddx(u.eta), f.zeta - c * ddx(u.zeta))
    h = 1e-5
    for _ in range(4):
        d = state(rng, 12, 1.0)
        fd = (hamiltonian_wahlen(SHALLOW, grid, u + h * d) - hamiltonian_wahlen(SHALLOW, grid, u - h * d)) / (2 * h)
        assert fd / (2 * math.pi) == pytest.approx(inner(flow.eta, d.zeta) - inner(d.eta, flow.zeta), abs=1e-9)


def test_time_derivative_conserves_energy_and_momentum():
    rng = np.random.default_rng(7)
    grid = SpectralGrid(12)
    u = state(rng, 12, 0.02)
    dt = time_derivative(SHALLOW, grid, u)
    h = 1e-6
    for functional in (lambda s: hamiltonian_wahlen(SHALLOW, grid, s), lambda s: momentum(grid, s)):
        rate = (functional(u + h * dt) - functional(u - h * dt)) / (2 * h)
        assert abs(rate) < 1e-9


def test_linearization_matches_finite_difference():
    rng = np.random.default_rng(8)
    grid = SpectralGrid(12)
    d = state(rng, 12, 1.0)
    h = 1e-7
    fd = (residual(SHALLOW, grid, 0.9, h * d) - residual(SHALLOW, grid, 0.9, -h * d)) * (0.5 / h)
    assert (fd - linearized_apply(SHALLOW, grid, 0.9, d)).norm() < 1e-8


def test_linear_block_is_singular_at_the_bifurcation_speed():
    from stokeswaves import bifurcation_speed

    c = bifurcation_speed(SHALLOW, 2)
    theta, g0, a = linear_symbols(SHALLOW, c, np.arange(5))
    det = g0 * a - theta**2
    assert abs(det[2]) < 1e-12
    assert np.all(np.abs(np.delete(det, [0, 2])) > 1e-3)


def test_zero_state_is_a_solution():
    grid = SpectralGrid(8)
    assert residual(SHALLOW, grid, 0.3, SurfaceState.zeros(8)).norm() == 0.0


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2 * math.pi))
def test_residual_equivariance(seed, theta):
    # exact up to aliasing, so the state must be resolved on the grid
    rng = np.random.default_rng(seed)
    grid = SpectralGrid(12)
    u = SurfaceState(smooth(rng, 12, 0.02, decay=3.0), smooth(rng, 12, 0.02, decay=3.0, mean=False))
    f = residual(SHALLOW, grid, 0.8, u)
    assert (residual(SHALLOW, grid, 0.8, u.translate(theta)) - f.translate(theta)).norm() < 1e-13
    assert (residual(SHALLOW, grid, 0.8, u.reflect()) + f.reflect()).norm() < 1e-13


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2 * math.pi))
def test_momentum_translation_invariant(seed, theta):
    rng = np.random.default_rng(seed)
    u = state(rng, 10, 0.1)
    assert momentum(None, u.translate(theta)) == pytest.approx(momentum(None, u), abs=1e-16)
    assert momentum(None, u.reflect()) == pytest.approx(momentum(None, u), abs=1e-16)


def test_state_json_round_trip():
    rng = np.random.default_rng(9)
    u = state(rng, 6, 0.1)
    v = SurfaceState.from_json_obj(u.to_json_obj())
    assert (u - v).norm() == 0.0


def test_decay_rate_of_geometric_spectrum():
    eta = 0.5 ** np.arange(12)
    assert decay_rate(SurfaceState(eta, np.zeros(12))) == pytest.approx(math.log(2), rel=1e-6)
