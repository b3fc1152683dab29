"""Initial conditions and probe fields."""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, SpectralField, to_spectral

__all__ = [
    "gaussian",
    "super_gaussian",
    "gaussian_dipole",
    "shielded_dipole",
    "curl_gaussian",
    "gaussian_mixture",
    "random_band_limited",
    "velocity_from_stream",
]


def _r2(grid: GridSpec, center) -> np.ndarray:
    center = np.zeros(grid.d) if center is None else np.asarray(center, dtype=float)
    return sum((x - c) ** 2 for x, c in zip(grid.coords, center))


def gaussian(grid: GridSpec, amplitude: float = 1.0, width: float = 1.0, center=None) -> SpectralField:
    """A exp(-|xi - center|^2 / (2 w^2)); scalar."""
    return to_spectral(amplitude * np.exp(-_r2(grid, center) / (2.0 * width**2)), grid)


def super_gaussian(grid: GridSpec, amplitude: float = 1.0, width: float = 1.0) -> SpectralField:
    """A exp(-(|xi| / w)^4); scalar.

    Its gradient vanishes to third order at the peak, so |grad f|^p has no
    cone there and rectangle-rule gradient norms converge fast for any p.
    """
    return to_spectral(amplitude * np.exp(-((_r2(grid, None) / width**2) ** 2)), grid)


def gaussian_dipole(
    grid: GridSpec, amplitude: float = 1.0, width: float = 1.0, separation: float = 1.0, center=None
) -> SpectralField:
    """Two opposite Gaussians at center -/+ (separation/2) e_1; zero mean.

    In 3-D the dipole is the x_3 component of a divergence-free field built
    as curl(G e_3) of the same pair, see :func:`curl_gaussian`.
    """
    c = np.zeros(grid.d) if center is None else np.asarray(center, dtype=float)
    off = np.zeros(grid.d)
    off[0] = 0.5 * separation
    pair = np.exp(-_r2(grid, c + off) / (2 * width**2)) - np.exp(-_r2(grid, c - off) / (2 * width**2))
    f = to_spectral(amplitude * pair, grid)
    if grid.d == 2:
        return f
    return _curl_of_potential(f, axis=2)


def shielded_dipole(grid: GridSpec, amplitude: float = 1.0, width: float = 1.0) -> SpectralField:
    """2-D vorticity -Delta d_1 G whose velocity d_perp(d_1 G) decays like a Gaussian."""
    if grid.d != 2:
        raise ValueError("shielded_dipole is 2-D")
    x1 = grid.coords[0]
    dG = -x1 / width**2 * np.exp(-_r2(grid, None) / (2 * width**2))
    f = to_spectral(amplitude * dG, grid)
    return f.with_coeffs(grid.k2 * f.coeffs)


def _curl_of_potential(psi: SpectralField, axis: int = 2) -> SpectralField:
    k = psi.grid.odd_wavenumbers
    A = np.zeros((3,) + psi.grid.shape, dtype=np.complex128)
    A[axis] = psi.coeffs[0]
    out = 1j * np.stack([k[1] * A[2] - k[2] * A[1], k[2] * A[0] - k[0] * A[2], k[0] * A[1] - k[1] * A[0]])
    return psi.with_coeffs(out)


def curl_gaussian(
    grid: GridSpec, amplitude: float = 1.0, width: float = 1.0, axis: int = 2, center=None
) -> SpectralField:
    """3-D divergence-free, mean-zero field curl(G e_axis)."""
    if grid.d != 3:
        raise ValueError("curl_gaussian is 3-D")
    return _curl_of_potential(gaussian(grid, amplitude, width, center), axis)


def velocity_from_stream(psi: SpectralField) -> SpectralField:
    """2-D velocity (d_2 psi, -d_1 psi); equals K(-Delta psi)."""
    k1, k2 = psi.grid.odd_wavenumbers
    return psi.with_coeffs(np.stack([1j * k2 * psi.coeffs[0], -1j * k1 * psi.coeffs[0]]))


def gaussian_mixture(
    grid: GridSpec, rng: np.random.Generator, count: int = 4, spread: float = 0.25, widths=(0.8, 2.0)
) -> SpectralField:
    """Random sum of Gaussians with random signs, kept well inside the box."""
    out = np.zeros(grid.shape)
    for _ in range(count):
        c = rng.uniform(-spread * grid.L, spread * grid.L, size=grid.d)
        w = rng.uniform(*widths)
        out += rng.normal() * np.exp(-_r2(grid, c) / (2 * w**2))
    return to_spectral(out, grid)


def random_band_limited(
    grid: GridSpec, rng: np.random.Generator, kmax: int | None = None, components: int = 1
) -> SpectralField:
    """Real random field with modes |index| <= kmax on every axis (default n/3)."""
    kmax = grid.n // 3 if kmax is None else kmax
    f = to_spectral(rng.standard_normal((components,) + grid.shape), grid)
    keep = np.abs(grid.index_axis) <= kmax
    mask = keep
    for _ in range(grid.d - 1):
        mask = np.multiply.outer(mask, keep)
    # the Nyquist plane is never kept, so Hermitian symmetry survives the mask
    return f.with_coeffs(f.coeffs * mask)
