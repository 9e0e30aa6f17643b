# besselab/tests/test_besselnorm.py
# Purpose: Bessel operator, H^gamma_p norms, the cutoff bump, unif sweeps, decay ratios
# and the unif-membership classifier.

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from besselab.errors import AliasingWarning
from besselab.services.analysis import besselnorm
from besselab.services.analysis.besselnorm import (
    SpaceIndex,
    Verdict,
    apply_bessel,
    bump_eta,
    classify_unif_membership,
    decay_ratio_sweep,
    eta_l2_scaling,
    eta_radial,
    hs_norm,
    phi_weight,
    sample_bump,
    sweep_points,
    unif_embedding_holds,
    unif_norm_ladder,
    unif_norm_sweep,
)
from besselab.services.analysis.gridfield import (
    Domain,
    Field,
    cyclic_translate,
    lp_norm,
    make_grid,
    sample_function,
)
from besselab.services.analysis.riesz import RieszParam, SingularCellRule, sample_f_alpha


def _gaussian(grid, center=0.0):
    return sample_function(
        lambda *xs: np.exp(-sum((x - center) ** 2 for x in xs)), grid
    )


def test_phi_weight_examples():
    assert phi_weight(3.7, (0.0, 0.0)) == 1.0
    assert phi_weight(2.0, (1.0,)) == pytest.approx(2.0, rel=1e-15)
    assert phi_weight(2.0, (0.6, 0.8)) == pytest.approx(2.0, rel=1e-15)


def test_apply_bessel_order_zero_is_identity():
    u = _gaussian(make_grid(1, 8.0, 64))
    out = apply_bessel(u, 0.0)
    assert np.array_equal(out.field.values, u.values)
    assert out.aliased is False


@pytest.mark.parametrize("n, N", [(1, 64), (2, 64)])
def test_apply_bessel_inverse_orders_cancel(n, N):
    u = _gaussian(make_grid(n, 8.0, N))
    there = apply_bessel(u, 2.0)
    back = apply_bessel(there.field, -2.0)
    assert not there.aliased and not back.aliased
    assert np.max(np.abs(back.field.values - u.values)) < 1e-9


def test_apply_bessel_scales_a_grid_harmonic():
    grid = make_grid(1, math.pi, 16)
    # xi = 3 is a lattice frequency for L = pi
    u = sample_function(lambda x: np.exp(3j * x), grid)
    out = apply_bessel(u, 1.0)
    assert np.allclose(out.field.values, math.sqrt(10.0) * u.values, rtol=1e-12, atol=1e-12)


def test_apply_bessel_flags_aliasing():
    grid = make_grid(1, 4.0, 32)
    spike = np.zeros(32)
    spike[16] = 1.0
    with pytest.warns(AliasingWarning, match="refine the grid"):
        out = apply_bessel(Field(grid, Domain.PHYSICAL, spike), 2.0)
    assert out.aliased is True


def test_apply_bessel_rejects_spectral_field():
    grid = make_grid(1, 4.0, 8)
    with pytest.raises(ValueError, match="physical"):
        apply_bessel(Field(grid, Domain.SPECTRAL, np.ones(8)), 1.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_hs_norm_order_zero_is_lp_norm(p):
    u = _gaussian(make_grid(2, 6.0, 32))
    assert hs_norm(u, SpaceIndex(gamma=0.0, p=p)) == pytest.approx(lp_norm(u, p), rel=1e-14)


def test_hs_norm_translation_invariant():
    u = _gaussian(make_grid(1, 8.0, 128))
    idx = SpaceIndex(gamma=1.0, p=3.0)
    shifted = cyclic_translate(u, (5,))
    assert hs_norm(shifted, idx) == pytest.approx(hs_norm(u, idx), rel=1e-10)


@pytest.mark.parametrize("center", [0.0, 1.5])
def test_hs_norm_nondecreasing_in_smoothness(center):
    u = _gaussian(make_grid(1, 8.0, 128), center=center)
    gammas = [-1.5, -0.5, 0.0, 0.25, 1.0, 2.0]
    norms = [hs_norm(u, SpaceIndex(gamma=g, p=2.0)) for g in gammas]
    assert all(b >= a * (1.0 - 1e-12) for a, b in zip(norms, norms[1:]))
    assert norms[-1] > norms[0]


def test_space_index_rejects_p_at_most_one():
    with pytest.raises(ValueError):
        SpaceIndex(gamma=0.0, p=1.0)


def test_bump_profile():
    assert bump_eta((0.5,)) == 1.0
    assert bump_eta((0.0, 3.0)) == 0.0
    assert bump_eta((1.5, 0.0, 0.0)) == pytest.approx(0.5, abs=1e-15)
    values = [bump_eta((r,)) for r in np.linspace(1.05, 1.95, 19)]
    assert all(0.0 < v < 1.0 for v in values)
    assert all(b < a for a, b in zip(values, values[1:]))


def test_bump_conditions_at_a_million_random_points():
    rng = np.random.default_rng(20240101)
    pts = rng.uniform(-3.0, 3.0, size=(10**6, 3))
    r = np.sqrt(np.sum(pts * pts, axis=1))
    eta = eta_radial(r)
    assert np.all((eta >= 0.0) & (eta <= 1.0))
    assert np.all(eta[r <= 1.0] == 1.0)
    assert np.all(eta[r >= 2.0] == 0.0)
    order = np.argsort(r)
    assert np.all(np.diff(eta[order]) <= 1e-12)


def test_sample_bump_support_and_center():
    grid = make_grid(2, 8.0, 64)
    eta = sample_bump(grid, 1.0, z=(3.0, 0.0)).values.real
    x, y = np.meshgrid(grid.axis(), grid.axis(), indexing="ij")
    r = np.hypot(x - 3.0, y)
    assert np.all(eta[r <= 1.0] == 1.0)
    assert np.all(eta[r >= 2.0] == 0.0)


def test_eta_l2_scaling_tracks_m_to_the_n():
    scaled, predicted = eta_l2_scaling(make_grid(2, 16.0, 256), 4.0)
    assert scaled == pytest.approx(predicted, rel=1e-2)


def test_sweep_points_layout():
    assert sweep_points(1, (0.0, 2.0), 2) == [(0.0,), (2.0,), (-2.0,)]
    pts = sweep_points(2, (1.0,), 4)
    assert len(pts) == 4
    assert all(math.hypot(*p) == pytest.approx(1.0, rel=1e-15) for p in pts)
    assert len(sweep_points(3, (0.0, 1.0), 26)) == 27
    assert len(sweep_points(3, (1.0,), 10)) == 10
    with pytest.raises(ValueError):
        sweep_points(2, (-1.0,), 4)


def test_unif_sweep_of_constant_field():
    grid = make_grid(1, 8.0, 256)
    ones = sample_function(lambda x: np.ones_like(x), grid)
    sweep = unif_norm_sweep(lambda z: ones, SpaceIndex(gamma=0.0, p=2.0), grid, radii=(0.0, 1.0, 3.0))
    norms = {v for _, v in sweep.table}
    assert len(norms) == 1
    assert sweep.sup == lp_norm(sample_bump(grid), 2.0)
    assert len(sweep.table) == 5


def test_unif_sweep_single_radius():
    grid = make_grid(1, 8.0, 256)
    u = _gaussian(grid, center=0.5)
    sweep = unif_norm_sweep(lambda z: u, SpaceIndex(gamma=0.0, p=2.0), grid, radii=(0.0,))
    assert len(sweep.table) == 1
    assert sweep.sup == sweep.table[0][1]
    assert sweep.argmax_z == (0.0,)


def test_unif_sweep_needs_room_for_the_cutoff():
    grid = make_grid(1, 3.0, 64)
    ones = sample_function(lambda x: np.ones_like(x), grid)
    with pytest.raises(ValueError, match="grid too small"):
        unif_norm_sweep(lambda z: ones, SpaceIndex(gamma=0.0, p=2.0), grid, radii=(0.0,))


def test_decay_ratio_is_uniformly_bounded():
    grid = make_grid(1, 16.0, 1024)
    zs = sweep_points(1, (0.0, 2.0, 4.0, 8.0), 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        table = decay_ratio_sweep(RieszParam(alpha=0.5, n=1), zs, grid)
    ratios = np.array([r for _, r in table])
    assert [z for z, _ in table] == zs
    assert np.all(np.isfinite(ratios)) and np.all(ratios > 0)
    assert ratios.max() / ratios.min() < 100.0


def test_decay_ratio_settles_under_refinement_in_2d():
    param = RieszParam(alpha=1.0, n=2)
    zs = sweep_points(2, (0.0, 2.0, 4.0, 8.0, 16.0), 1)
    tables = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        for N in (256, 512):
            tables.append(decay_ratio_sweep(param, zs, make_grid(2, 8.0, N)))
    coarse = np.array([r for _, r in tables[0]])
    fine = np.array([r for _, r in tables[1]])
    assert len(fine) == 5
    assert np.all(np.isfinite(fine)) and np.all(fine > 0)
    assert np.all(np.abs(fine - coarse) / fine < 0.1)


def test_decay_guard_sees_the_weighted_spectrum(monkeypatch):
    seen = []
    real = besselnorm.aliasing_fraction

    def spy(weighted, grid):
        seen.append(float(np.max(np.abs(weighted))))
        return real(weighted, grid)

    monkeypatch.setattr(besselnorm, "aliasing_fraction", spy)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        table = decay_ratio_sweep(RieszParam(alpha=0.5, n=1), [(0.0,), (4.0,)], make_grid(1, 16.0, 256))
    assert sorted(seen) == sorted(r for _, r in table)


def test_decay_guard_warns_on_a_coarse_grid():
    with pytest.warns(AliasingWarning, match="weighted spectral energy"):
        decay_ratio_sweep(RieszParam(alpha=0.5, n=1), [(0.0,)], make_grid(1, 16.0, 256))


def test_unif_sweep_of_riesz_kernel_peaks_at_the_singularity():
    grid = make_grid(1, 8.0, 1024)
    param = RieszParam(alpha=0.5, n=1)
    sweep = unif_norm_sweep(
        lambda z: sample_f_alpha(param, grid, SingularCellRule(), z),
        SpaceIndex(gamma=0.0, p=2.0),
        grid,
        radii=(0.0, 0.5, 1.0, 2.0),
    )
    assert sweep.argmax_z == (0.0,)
    at_zero = dict(sweep.table)[(0.0,)]
    assert all(v < at_zero for z, v in sweep.table if z != (0.0,))


def test_ladder_at_the_singularity_matches_a_wider_sweep():
    param = RieszParam(alpha=0.6, n=1)
    grids = [make_grid(1, 8.0, N) for N in (512, 1024, 2048)]
    narrow = unif_norm_ladder(param, 0.0, grids)
    wide = unif_norm_ladder(param, 0.0, grids, radii=(0.0, 0.5, 1.0, 2.0))
    assert narrow == wide


def test_decay_ratio_needs_tempered_kernel():
    with pytest.raises(ValueError, match="0 < alpha < n"):
        decay_ratio_sweep(RieszParam(alpha=1.0, n=1), [(0.0,)], make_grid(1, 16.0, 64))


@pytest.mark.parametrize(
    "n, t, alpha, verdict",
    [
        (3, 1.0, 2.0, Verdict.MEMBER),
        (1, 0.25, 0.75, Verdict.BOUNDARY),
        (1, 0.25, 0.9, Verdict.NON_MEMBER),
        (2, 3.0, 2.0, Verdict.BOUNDARY),
        (2, 3.0, 2.5, Verdict.NON_MEMBER),
    ],
)
def test_membership_analytic(n, t, alpha, verdict):
    got = classify_unif_membership(RieszParam(alpha=alpha, n=n), t, analytic_only=True)
    assert got.verdict is verdict
    assert got.numeric_evidence is None


def test_membership_rejects_t_below_minus_half_n():
    with pytest.raises(ValueError, match="-n/2"):
        classify_unif_membership(RieszParam(alpha=0.5, n=2), -1.0)


@settings(max_examples=1000, deadline=None)
@given(st.integers(1, 3), st.floats(0.05, 0.95), st.floats(-0.45, 3.0))
def test_membership_threshold_predicate(n, frac, t):
    alpha = frac * n
    got = classify_unif_membership(RieszParam(alpha=alpha, n=n), t * n)
    threshold = min(n, t * n + n / 2)
    assert (got.verdict is Verdict.MEMBER) == (alpha < threshold)
    assert (got.verdict is Verdict.NON_MEMBER) == (alpha > threshold)


def test_membership_ladder_stabilizes_below_threshold():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        got = classify_unif_membership(
            RieszParam(alpha=0.6, n=1), 0.25, analytic_only=False, base_N=4096
        )
    assert got.verdict is Verdict.MEMBER
    assert [N for N, _ in got.ladder] == [4096, 8192, 16384]
    (_, a), (_, b) = got.ladder[-2:]
    assert abs(b - a) / b < 0.05
    assert got.contracting is True


def test_membership_ladder_grows_above_threshold():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        got = classify_unif_membership(
            RieszParam(alpha=0.9, n=1), 0.25, analytic_only=False, base_N=2048
        )
    assert got.verdict is Verdict.NON_MEMBER
    norms = [v for _, v in got.ladder]
    assert all(b > a for a, b in zip(norms, norms[1:]))
    assert got.numeric_evidence.slope > 0


@pytest.mark.parametrize(
    "src, dst, n, holds",
    [
        ((0.0, 2.0), (0.0, 2.0), 3, True),
        ((1.0, 2.0), (0.0, 4.0), 2, True),
        ((0.0, 2.0), (1.0, 2.0), 2, False),
        ((0.0, 4.0), (0.0, 2.0), 1, True),
        ((0.0, 2.0), (0.0, 4.0), 2, False),
    ],
)
def test_unif_embedding(src, dst, n, holds):
    a = SpaceIndex(gamma=src[0], p=src[1])
    b = SpaceIndex(gamma=dst[0], p=dst[1])
    assert unif_embedding_holds(a, b, n) is holds
