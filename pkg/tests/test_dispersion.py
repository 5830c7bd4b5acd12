import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import omega_mp
from stokeswaves import (
    DomainError,
    PhysicalParams,
    ResonanceSearchError,
    UnsupportedConfigurationError,
    atlas_scan,
    bifurcation_speed,
    bond_numbers,
    classify_kernel,
    find_resonant_kappa,
    kernel_regime,
    omega,
    phase_speed,
)
from stokeswaves.dispersion import curvature_scale

positive = st.floats(0.1, 10.0)
depths = st.one_of(st.just(math.inf), st.floats(0.1, 10.0))
params_st = st.builds(PhysicalParams, positive, depths, st.floats(0.0, 5.0), st.floats(-5.0, 5.0))
wavenumber = st.floats(0.01, 50.0) | st.integers(1, 50).map(float)


def test_pure_gravity_deep_water():
    p = PhysicalParams()
    assert omega(p, 4.0) == pytest.approx(2.0, rel=1e-15)
    assert phase_speed(p, 1.0) == 1.0
    assert bifurcation_speed(p, -1) == -1.0


def test_zero_wavenumber_rejected():
    with pytest.raises(DomainError):
        omega(PhysicalParams(), 0.0)
    with pytest.raises(DomainError):
        bifurcation_speed(PhysicalParams(), 0)


@pytest.mark.parametrize("bad", [dict(g=0.0), dict(depth=-1.0), dict(kappa=-0.1), dict(gamma=math.nan)])
def test_invalid_params(bad):
    with pytest.raises(DomainError):
        PhysicalParams(**bad)


def test_bond_numbers_need_finite_depth():
    with pytest.raises(UnsupportedConfigurationError):
        bond_numbers(PhysicalParams())


def test_bond_numbers_without_vorticity_are_classical():
    b_plus, b_minus = bond_numbers(PhysicalParams(2.0, 0.5, 0.3, 0.0))
    assert b_plus == b_minus == pytest.approx(0.3 / (2.0 * 0.25))


def test_vector_input():
    xi = np.array([-3.0, -1.0, 1.0, 2.5])
    p = PhysicalParams(1.0, 2.0, 0.1, 0.4)
    np.testing.assert_allclose(omega(p, xi) / xi, phase_speed(p, xi), rtol=1e-14)


def test_phase_speed_limits_at_zero():
    p = PhysicalParams(1.0, 2.0, 0.1, 0.4)
    for side, xi in (("+", 1e-7), ("-", -1e-7)):
        assert phase_speed(p, limit=side) == pytest.approx(phase_speed(p, xi), rel=1e-10)
    deep = PhysicalParams(1.0, math.inf, 0.0, 2.0)
    assert phase_speed(deep, limit="+") == math.inf
    assert phase_speed(deep, limit="-") == pytest.approx(-0.5)


def test_curvature_limit_matches_bond_numbers():
    # f''(0+) = alpha (B_+ - 1/3), checked by a finite difference of f
    p = PhysicalParams(1.0, 1.5, 0.2, 0.8)
    h = 1e-3
    f = lambda x: phase_speed(p, x)  # noqa: E731
    second = (f(3 * h) - 2 * f(2 * h) + f(h)) / h**2
    b_plus, _ = bond_numbers(p)
    assert second == pytest.approx(curvature_scale(p) * (b_plus - 1 / 3), rel=1e-2)


@given(params_st, wavenumber)
def test_omega_positive_and_matches_oracle(p, xi):
    for x in (xi, -xi):
        value = omega(p, x)
        assert value > 0
        assert value == pytest.approx(float(omega_mp(p.g, p.depth, p.kappa, p.gamma, x)), rel=1e-12)


@given(params_st, wavenumber)
def test_vorticity_reversal_mirrors_wavenumber(p, xi):
    mirrored = p.replace(gamma=-p.gamma)
    assert omega(p, -xi) == pytest.approx(omega(mirrored, xi), rel=1e-13)


@given(params_st, st.integers(1, 8).flatmap(lambda m: st.sampled_from([m, -m])))
def test_classification_consistent_with_regime(p, j_star):
    record = classify_kernel(p, j_star, j_max=64)
    assert record.kernel_dim in (2, 4)
    side = kernel_regime(p).side(1 if j_star > 0 else -1)
    if side in ("increasing", "decreasing"):
        assert record.kernel_dim == 2
    if record.kernel_dim == 4:
        assert np.sign(record.partner) == np.sign(j_star)
        assert abs(phase_speed(p, record.partner) - record.c_star) <= 1e-8 * max(1.0, abs(record.c_star))


def test_wilton_classification():
    record = classify_kernel(PhysicalParams(1.0, math.inf, 0.5, 0.0), -1)
    assert (record.kernel_dim, record.partner) == (4, -2)
    assert record.c_star == pytest.approx(-math.sqrt(1.5), rel=1e-15)


def test_resonance_requires_ordered_modes():
    with pytest.raises(DomainError):
        find_resonant_kappa(1.0, math.inf, 0.0, -2, -1)
    with pytest.raises(DomainError):
        find_resonant_kappa(1.0, math.inf, 0.0, 1, -2)


def test_resonance_search_reports_missing_sign_change():
    # the Wilton value 0.5 lies above the cap
    with pytest.raises(ResonanceSearchError) as info:
        find_resonant_kappa(1.0, math.inf, 0.0, -1, -2, kappa_max=0.3)
    assert "kappa_max" in info.value.details


@given(st.integers(1, 5), st.integers(1, 5), positive)
def test_deep_water_resonance_closed_form(j_star, step, g):
    # (g + kappa j^2)/|j| equal for both modes gives kappa = g / (j j*)
    j = j_star + step
    assert find_resonant_kappa(g, math.inf, 0.0, j_star, j) == pytest.approx(g / (j * j_star), rel=1e-12)


def test_atlas_order_and_resonances():
    records = atlas_scan(dict(g=1.0, depth=math.inf, kappa=[0.0, 0.1, 0.5], gamma=0.0, j_star=-1))
    assert [r.kernel_dim for r in records] == [2, 4, 4]
    assert [r.partner for r in records] == [None, -10, -2]


def test_atlas_missing_axis():
    with pytest.raises(DomainError):
        atlas_scan(dict(g=1.0, depth=1.0, kappa=0.0))


def test_atlas_threads_do_not_change_results():
    grid = dict(g=1.0, depth=[1.0, math.inf], kappa=[0.0, 0.2, 0.5], gamma=[-1.0, 0.0, 1.0], j_star=[1, -1])
    one = [r.as_dict() for r in atlas_scan(grid)]
    many = [r.as_dict() for r in atlas_scan(grid, threads=3)]
    assert one == many
