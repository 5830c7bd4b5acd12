import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stokeswaves import (
    DomainError,
    GeometryError,
    MisuseError,
    PhysicalParams,
    SpectralGrid,
    bifurcation_speed,
    mountain_pass,
    nonresonant_branch,
    orbit_distance,
    orbit_distinct,
    orbit_tag,
    reduced_phi,
    refine_critical_point,
    resonant_fixed_momentum,
    resonant_fixed_speed,
    residual,
)
from stokeswaves.bifurcation import A_GUARD, default_radius, loglog_slope
from stokeswaves.reduction import reflect, rotate, star_norm_sq

WILTON = PhysicalParams(1.0, math.inf, 0.5, 0.0)
vectors = st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4).map(np.array).filter(lambda v: np.abs(v).max() > 1e-3)


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0])
    assert loglog_slope(x, 3 * x**2) == pytest.approx(2.0)
    assert loglog_slope(x, -x**3) == pytest.approx(3.0)


# ------------------------------------------------------------------ orbits


@given(vectors, st.floats(0.0, 2 * math.pi), st.booleans())
def test_group_images_are_not_distinct(wilton, v, theta, flip):
    _, _, kernel = wilton
    w = rotate(kernel, reflect(kernel, v) if flip else v, theta)
    assert not orbit_distinct(kernel, v, w)
    assert orbit_distance(kernel, v, w) < 1e-9
    assert np.allclose(orbit_tag(kernel, v).flat, orbit_tag(kernel, w).flat, atol=1e-9)


def test_block_supports_are_distinct(wilton):
    _, _, kernel = wilton
    v1 = np.array([1.0, 0.0, 0.0, 0.0])
    v2 = np.array([0.0, 0.0, math.sqrt(0.5), 0.0])  # same star norm, on mode -2
    assert star_norm_sq(kernel, v2) == pytest.approx(star_norm_sq(kernel, v1))
    assert orbit_distinct(kernel, v1, v2)


def test_orbit_tag_is_canonical(wilton):
    _, _, kernel = wilton
    tag = orbit_tag(kernel, np.array([0.3, -0.4, 0.1, 0.2])).flat
    assert tag[1] == pytest.approx(0.0, abs=1e-15)
    assert tag[0] > 0


# ---------------------------------------------------------- non-resonant branch


def test_branch_trivial_point(deep_gravity):
    params, grid, _ = deep_gravity
    (p,) = nonresonant_branch(params, grid, 1, [0.0])
    assert p.c == 1.0 and p.state.norm() == 0.0


def test_branch_points_are_even_solutions(deep_gravity):
    params, grid, _ = deep_gravity
    points = nonresonant_branch(params, grid, 1, [0.01, -0.02])
    for p in points:
        assert residual(params, grid, p.c, p.state).norm() <= 1e-10
        assert p.residual_norm <= 1e-10
        # eta even (real cosine coefficients), zeta odd (imaginary ones)
        assert np.abs(p.state.eta.imag).max() < 1e-10
        assert np.abs(p.state.zeta.real).max() < 1e-10
    # the speed grows with the amplitude on either side of the trivial branch
    assert 1.0 < points[0].c < points[1].c


def test_branch_with_vorticity_and_depth():
    params = PhysicalParams(1.0, 1.5, 0.05, 0.6)
    grid = SpectralGrid(24)
    (p,) = nonresonant_branch(params, grid, 2, [0.01])
    assert p.residual_norm <= 1e-10
    assert abs(p.c - bifurcation_speed(params, 2)) < 1e-2
    assert p.state.norm() > 0


def test_branch_threads_are_order_deterministic(deep_gravity):
    params, grid, _ = deep_gravity
    eps = [0.01, 0.015, 0.02]
    one = [p.c for p in nonresonant_branch(params, grid, 1, eps)]
    many = [p.c for p in nonresonant_branch(params, grid, 1, eps, threads=3)]
    assert one == many


def test_branch_rejects_resonance_and_large_eps(wilton, deep_gravity):
    params, grid, _ = wilton
    with pytest.raises(MisuseError):
        nonresonant_branch(params, grid, -1, [0.01])
    params, grid, _ = deep_gravity
    with pytest.raises(DomainError):
        nonresonant_branch(params, grid, 1, [0.5])


# ---------------------------------------------------------------- fixed speed


def test_fixed_speed_preconditions(wilton, deep_gravity):
    params, grid, kernel = wilton
    with pytest.raises(MisuseError):
        resonant_fixed_speed(params, grid, -1, -2, kernel.c_star)
    with pytest.raises(DomainError):
        resonant_fixed_speed(params, grid, -1, -2, kernel.c_star + 1.0)
    with pytest.raises(MisuseError):
        resonant_fixed_speed(params, grid, -1, -3, kernel.c_star + 0.01)
    with pytest.raises(MisuseError):
        resonant_fixed_speed(deep_gravity[0], deep_gravity[1], 1, 2, 1.01)


@pytest.fixture(scope="module")
def symmetric_orbit(wilton):
    params, grid, kernel = wilton
    c = kernel.c_star + 0.01
    points, report = resonant_fixed_speed(params, grid, -1, -2, c, multistart=8, n_random=0, full_output=True)
    return c, points, report


def test_fixed_speed_symmetric_orbit(wilton, symmetric_orbit):
    params, grid, kernel = wilton
    c, points, report = symmetric_orbit
    assert len(points) >= 1
    assert set(report) >= {"symmetric", "random", "rejected"}
    rng = np.random.default_rng(0)
    for p in points:
        assert residual(params, grid, c, p.state).norm() <= 1e-10
        assert star_norm_sq(kernel, p.coords) > 0
        phi = reduced_phi(params, kernel, grid, c, p.coords)
        for theta in rng.uniform(0, 2 * math.pi, 3):
            assert reduced_phi(params, kernel, grid, c, rotate(kernel, p.coords, theta)) == pytest.approx(phi, abs=1e-10)
    # the regression value of the level above c*
    assert points[0].phi == pytest.approx(2.879015e-6, rel=1e-5)


def test_default_radius_scales_with_speed_offset(wilton):
    _, _, kernel = wilton
    assert default_radius(kernel, kernel.c_star + 1e-4) == pytest.approx(0.01)
    assert default_radius(kernel, kernel.c_star + 0.01) == pytest.approx(0.06)
    assert default_radius(kernel, kernel.c_star + 0.5) == pytest.approx(0.1)


# -------------------------------------------------------------- mountain pass


def _radial(kernel, power):
    weights = np.abs(np.repeat(np.asarray(kernel.modes, dtype=float), 2))

    def phi(v):
        s = math.sqrt(star_norm_sq(kernel, v))
        return s * s - (s**power if power else 0.0)

    def grad(v):
        s = math.sqrt(star_norm_sq(kernel, v))
        # d s^2 / dv = weights * v, d s^p / dv = (p/2) s^(p-2) weights * v
        return (1.0 - (0.5 * power * s ** (power - 2) if power else 0.0)) * weights * v

    return phi, grad


def test_mountain_pass_on_a_radial_ridge(wilton):
    _, _, kernel = wilton
    phi, grad = _radial(kernel, 3)
    result = mountain_pass(None, None, kernel, None, phi=phi, grad=grad, radius=2.0)
    level, point = result
    assert result.converged
    assert level == pytest.approx(4 / 27, rel=1e-8)
    assert math.sqrt(star_norm_sq(kernel, point)) == pytest.approx(2 / 3, rel=1e-4)
    # min-max consistency: the level does not exceed the maximum along a straight ray
    ray = point / math.sqrt(star_norm_sq(kernel, point))
    assert level <= phi(2 / 3 * ray) + 1e-12


def test_mountain_pass_reports_missing_geometry(wilton):
    _, _, kernel = wilton
    phi, grad = _radial(kernel, 0)
    with pytest.raises(GeometryError):
        mountain_pass(None, None, kernel, None, phi=phi, grad=grad, radius=2.0)


def test_mountain_pass_needs_a_gradient(wilton):
    _, _, kernel = wilton
    with pytest.raises(MisuseError):
        mountain_pass(None, None, kernel, None, phi=lambda v: 0.0)


def test_mountain_pass_matches_the_fixed_speed_orbit(wilton, symmetric_orbit):
    params, grid, kernel = wilton
    c, points, _ = symmetric_orbit
    result = mountain_pass(params, grid, kernel, c)
    assert result.level > 0
    v, gnorm, ok = refine_critical_point(params, kernel, grid, c, result.point)
    assert ok and gnorm <= 1e-12
    assert min(orbit_distance(kernel, v, p.coords) for p in points) <= 1e-8


# ------------------------------------------------------------- fixed momentum


def test_fixed_momentum_preconditions(wilton):
    params, grid, _ = wilton
    with pytest.raises(MisuseError):
        resonant_fixed_momentum(params, grid, -1, -2, -1e-4)
    with pytest.raises(DomainError):
        resonant_fixed_momentum(params, grid, -1, -2, 2 * A_GUARD)
