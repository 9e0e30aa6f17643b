# besselab/tests/test_gridfield.py
# Purpose: Grid construction, sampling, the normalized DFT pair, L_p quadrature and slope fits.

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from besselab.errors import NumericFailure
from besselab.services.analysis.gridfield import (
    Domain,
    Field,
    cyclic_translate,
    dft,
    fit_loglog_slope,
    frequency_axis,
    idft,
    lp_norm,
    make_grid,
    outer_shell,
    sample_function,
    spectral_l2_norm,
)


def _random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return Field(grid, Domain.PHYSICAL, vals)


def test_make_grid_spacing():
    assert make_grid(1, 8.0, 16).h == 1.0
    assert make_grid(2, 16.0, 128).h == 0.25


@pytest.mark.parametrize("n, L, N", [(1, 8.0, 12), (4, 8.0, 16), (1, 0.0, 16), (1, 8.0, 4)])
def test_make_grid_rejects_bad_parameters(n, L, N):
    with pytest.raises(ValueError):
        make_grid(n, L, N)


def test_sample_constant_and_identity():
    grid = make_grid(1, 8.0, 16)
    ones = sample_function(lambda x: np.ones_like(x), grid)
    assert np.all(ones.values == 1.0)
    ident = sample_function(lambda x: x, grid)
    assert np.array_equal(ident.values.real, np.arange(-8.0, 8.0))


def test_sample_pole_on_grid_point_names_the_point():
    grid = make_grid(1, 8.0, 16)
    with pytest.raises(NumericFailure, match=r"\(8,\)"):
        sample_function(lambda x: 1.0 / x, grid)


def test_field_values_are_read_only():
    grid = make_grid(2, 4.0, 8)
    u = _random_field(grid)
    with pytest.raises(ValueError):
        u.values[0, 0] = 1.0
    assert u.flat_values.shape == (64,)


def test_field_rejects_wrong_length():
    with pytest.raises(ValueError, match="does not match"):
        Field(make_grid(1, 4.0, 8), Domain.PHYSICAL, np.zeros(7))


def test_dft_of_ones_is_a_single_spike():
    grid = make_grid(1, math.pi, 64)
    spec = dft(sample_function(lambda x: np.ones_like(x), grid)).values
    assert spec[32] == pytest.approx(math.sqrt(2.0 * math.pi), rel=1e-12)
    others = np.delete(spec, 32)
    assert np.max(np.abs(others)) < 1e-12


def test_frequency_axis_is_centered():
    grid = make_grid(1, math.pi, 8)
    assert np.allclose(frequency_axis(grid), np.arange(-4, 4))


@pytest.mark.parametrize("n, N", [(1, 64), (2, 16), (3, 8)])
def test_dft_inverse_and_plancherel(n, N):
    grid = make_grid(n, 3.0, N)
    u = _random_field(grid, seed=n)
    spec = dft(u)
    back = idft(spec)
    assert np.max(np.abs(back.values - u.values)) < 1e-12
    assert spectral_l2_norm(spec) == pytest.approx(lp_norm(u, 2.0), rel=1e-12)


def test_dft_rejects_spectral_input():
    grid = make_grid(1, 4.0, 8)
    with pytest.raises(ValueError, match="physical"):
        dft(Field(grid, Domain.SPECTRAL, np.ones(8)))


def test_lp_norm_examples():
    grid = make_grid(1, 8.0, 16)
    ones = Field(grid, Domain.PHYSICAL, np.ones(16))
    assert lp_norm(ones, 2.0) == pytest.approx(4.0, rel=1e-15)
    spike = np.zeros(16)
    spike[3] = 1.0
    assert lp_norm(ones.with_values(spike), 2.0) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("p", [1.0, 0.5, float("inf")])
def test_lp_norm_rejects_bad_exponent(p):
    grid = make_grid(1, 8.0, 16)
    with pytest.raises(ValueError):
        lp_norm(Field(grid, Domain.PHYSICAL, np.ones(16)), p)


def test_cyclic_translate_identity_shifts():
    grid = make_grid(2, 4.0, 8)
    u = _random_field(grid)
    assert np.array_equal(cyclic_translate(u, (0, 0)).values, u.values)
    assert np.array_equal(cyclic_translate(u, (8, -8)).values, u.values)


@settings(max_examples=25, deadline=None)
@given(st.integers(-40, 40), st.integers(-40, 40), st.floats(1.1, 6.0))
def test_lp_norm_exactly_translation_invariant(a, b, p):
    grid = make_grid(2, 4.0, 16)
    u = _random_field(grid, seed=7)
    assert lp_norm(cyclic_translate(u, (a, b)), p) == lp_norm(u, p)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3), st.floats(0.0, 2 * math.pi), st.floats(1.1, 6.0))
def test_lp_norm_absolutely_homogeneous(c, phase, p):
    u = _random_field(make_grid(2, 4.0, 16), seed=3)
    scale = c * complex(math.cos(phase), math.sin(phase))
    scaled = u.with_values(scale * u.values)
    assert lp_norm(scaled, p) == pytest.approx(abs(scale) * lp_norm(u, p), rel=1e-12)


def test_outer_shell_counts_boundary_entries():
    assert int(outer_shell(make_grid(2, 1.0, 8)).sum()) == 8 * 8 - 6 * 6
    assert int(outer_shell(make_grid(1, 1.0, 8)).sum()) == 2


def test_slope_fit_exact_power_laws():
    fit = fit_loglog_slope([(2, 4), (4, 16), (8, 64)])
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    cubic = fit_loglog_slope([(m, 0.3 * m**3) for m in (1, 2, 4, 8)])
    assert cubic.slope == pytest.approx(3.0, abs=1e-12)


def test_slope_fit_noisy_power_law():
    rng = np.random.default_rng(2024)
    ms = 2.0 ** np.arange(1, 9)
    vals = 5.0 * ms**1.7 * (1.0 + 0.1 * rng.uniform(-1.0, 1.0, ms.size))
    fit = fit_loglog_slope(list(zip(ms, vals)))
    assert abs(fit.slope - 1.7) < 0.15


def test_slope_fit_constant_values_has_unit_r2():
    fit = fit_loglog_slope([(1, 3.0), (2, 3.0), (4, 3.0)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert fit.r2 == 1.0


@pytest.mark.parametrize(
    "points", [[(1, 1), (2, 2)], [(1, 1), (2, -2), (4, 4)], [(0, 1), (2, 2), (4, 4)]]
)
def test_slope_fit_rejects_bad_points(points):
    with pytest.raises(ValueError):
        fit_loglog_slope(points)
