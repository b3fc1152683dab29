import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsvort.fields import gaussian, random_band_limited
from nsvort.grid import (
    SpectralField,
    boundary_mass,
    dealias,
    field_lp_norm,
    lp_norm,
    make_grid,
    refined_lp_norm,
    spectral_gradient,
    to_physical,
    to_spectral,
)


def test_make_grid_2d_spacing_and_max_wavenumber():
    g = make_grid(2, 64, 20)
    assert g.dx == pytest.approx(0.625)
    assert np.max(g.k_axis) == pytest.approx(math.pi / 20 * 31)
    assert np.min(g.k_axis) == pytest.approx(-math.pi / 20 * 32)


def test_make_grid_3d_cell_volume():
    g = make_grid(3, 8, 1)
    assert g.coords[0].size == 512
    assert g.cell_volume == pytest.approx(0.015625)
    assert g.cell_volume * g.n**g.d == pytest.approx((2 * g.L) ** g.d)


@pytest.mark.parametrize("args", [(2, 63, 20), (4, 64, 20), (2, 4, 20), (2, 64, 0.0), (2, 64, -1.0)])
def test_make_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_constant_field_has_only_mean_mode(grid2):
    f = to_spectral(np.ones(grid2.shape), grid2)
    assert f.coeffs[0, 0, 0] == pytest.approx(1.0)
    rest = f.coeffs.copy()
    rest[0, 0, 0] = 0
    assert np.max(np.abs(rest)) < 1e-15


def test_cosine_has_two_modes(grid2):
    x1 = grid2.coords[0]
    f = to_spectral(np.cos(math.pi / grid2.L * x1), grid2)
    nz = np.argwhere(np.abs(f.coeffs[0]) > 1e-12)
    idx = sorted(int(grid2.index_axis[i]) for i, j in nz)
    assert idx == [-1, 1]
    assert all(j == 0 for _, j in nz)


def test_round_trip_random_smooth(grid2, rng):
    f = to_physical(random_band_limited(grid2, rng, kmax=8))
    back = to_physical(to_spectral(f, grid2))
    assert np.max(np.abs(back - f)) <= 1e-12


def test_round_trip_shape_mismatch(grid2):
    with pytest.raises(ValueError):
        to_spectral(np.zeros((32, 32)), grid2)


def test_to_physical_zero_and_constant(grid2):
    assert np.all(to_physical(SpectralField.zeros(grid2)) == 0)
    c = np.zeros(grid2.shape, dtype=complex)
    c[0, 0] = 2.5
    assert np.allclose(to_physical(SpectralField(grid2, c)), 2.5, atol=1e-15, rtol=0)


def test_to_physical_rejects_non_hermitian(grid2):
    c = np.zeros(grid2.shape, dtype=complex)
    c[1, 0] = 1.0  # no conjugate partner at (-1, 0)
    with pytest.raises(ValueError, match="Hermitian"):
        to_physical(SpectralField(grid2, c))


def test_gaussian_l2_norm_closed_form(grid2):
    assert field_lp_norm(gaussian(grid2), 2) == pytest.approx(math.sqrt(math.pi), abs=1e-8)


def test_gaussian_l1_norm_closed_form(grid2):
    assert field_lp_norm(gaussian(grid2), 1) == pytest.approx(2 * math.pi, abs=1e-8)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0])
def test_zero_field_norm(grid2, p):
    assert lp_norm(np.zeros(grid2.shape), p, grid2) == 0.0


def test_lp_norm_rejects_bad_exponent(grid2):
    with pytest.raises(ValueError):
        lp_norm(np.ones(grid2.shape), 0.5, grid2)


def test_gradient_of_sine_is_exact(grid2):
    k = math.pi / grid2.L
    x1 = grid2.coords[0]
    d1, d2 = spectral_gradient(to_spectral(np.sin(k * x1), grid2))
    assert np.max(np.abs(to_physical(d1)[0] - k * np.cos(k * x1))) < 1e-14
    assert np.max(np.abs(to_physical(d2))) < 1e-14


def test_gradient_of_constant_vanishes(grid2):
    for d in spectral_gradient(to_spectral(np.full(grid2.shape, 3.0), grid2)):
        assert np.max(np.abs(d.coeffs)) == 0


def test_gradient_of_gaussian_closed_form(grid2):
    # width 2 keeps the spectrum at the grid cutoff below e^-50
    f = gaussian(grid2, 1.0, 2.0)
    x1 = grid2.coords[0]
    exact = -x1 / 4.0 * to_physical(f)[0]
    assert np.max(np.abs(to_physical(spectral_gradient(f)[0])[0] - exact)) <= 1e-8


def test_dealias_keeps_low_band(grid2, rng):
    f = random_band_limited(grid2, rng, kmax=grid2.n // 3)
    assert np.array_equal(dealias(f).coeffs, f.coeffs)


def test_dealias_kills_top_mode(grid2):
    k = math.pi / grid2.L * (grid2.n // 2 - 1)
    f = to_spectral(np.cos(k * grid2.coords[0]), grid2)
    assert np.max(np.abs(dealias(f).coeffs)) < 1e-15


def test_dealias_idempotent(grid2, rng):
    f = to_spectral(rng.standard_normal(grid2.shape), grid2)
    assert np.array_equal(dealias(dealias(f)).coeffs, dealias(f).coeffs)


@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 3]))
def test_parseval(seed, d):
    g = make_grid(d, 16, 3.0)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    F = to_spectral(f, g)
    lhs = lp_norm(f, 2, g) ** 2
    rhs = float(np.sum(np.abs(F.coeffs) ** 2)) * (2 * g.L) ** d
    assert lhs == pytest.approx(rhs, rel=1e-10)


@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 3]), components=st.sampled_from([1, 3]))
def test_round_trip_property(seed, d, components):
    g = make_grid(d, 8, 1.0)
    f = np.random.default_rng(seed).standard_normal((components,) + g.shape)
    F = to_spectral(f, g)
    assert np.max(np.abs(to_physical(F) - f)) <= 1e-12
    # exact Hermitian symmetry: c(-k) = conj(c(k))
    flipped = F.coeffs
    for ax in range(1, d + 1):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    assert np.array_equal(flipped, np.conj(F.coeffs))


@given(
    seed=st.integers(0, 2**32 - 1),
    alpha=st.floats(-1e3, 1e3, allow_nan=False).filter(lambda a: abs(a) > 1e-6),
    p=st.sampled_from([1.0, 1.5, 2.0, 3.0, 7.5]),
)
def test_lp_norm_homogeneous(seed, alpha, p):
    g = make_grid(2, 16, 2.0)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    assert lp_norm(alpha * f, p, g) == pytest.approx(abs(alpha) * lp_norm(f, p, g), rel=1e-12)


def test_lp_norm_vector_uses_euclidean_magnitude(grid2):
    f = np.stack([np.full(grid2.shape, 3.0), np.full(grid2.shape, 4.0)])
    assert lp_norm(f, 2, grid2) == pytest.approx(5.0 * 2 * grid2.L)


def test_refined_norm_matches_plain_norm_on_smooth_integrand(grid2):
    f = gaussian(grid2, 1.0, 2.0)
    assert refined_lp_norm(f, 2.0, 4) == pytest.approx(field_lp_norm(f, 2.0), rel=1e-13)


def test_boundary_mass(grid2):
    assert boundary_mass(to_physical(gaussian(grid2))[0], grid2) < 1e-15
    assert boundary_mass(np.ones(grid2.shape), grid2) == 1.0
    assert boundary_mass(np.zeros(grid2.shape), grid2) == 0.0
