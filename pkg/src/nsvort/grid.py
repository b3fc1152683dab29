"""Periodic grids, spectral fields and L^p quadrature.

The whole space R^d is replaced by the torus [-L, L)^d sampled on n points per
axis.  A :class:`SpectralField` stores complex Fourier coefficients normalised
so that the k = 0 coefficient is the spatial mean, i.e. ``coeffs = fftn(f) / n^d``.
Coefficient arrays carry a leading component axis, shape ``(C, n, ..., n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "SpectralField",
    "make_grid",
    "to_spectral",
    "to_physical",
    "lp_norm",
    "field_lp_norm",
    "refined_lp_norm",
    "spectral_gradient",
    "dealias",
    "boundary_mass",
]

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Torus [-L, L)^d with n modes per axis."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"half-width L must be positive, got {self.L}")

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        return (self.d, self.n, self.L) == (other.d, other.n, other.L)

    def __hash__(self):
        return hash((self.d, self.n, self.L))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @cached_property
    def index_axis(self) -> np.ndarray:
        """Integer mode indices in FFT order, -n/2 .. n/2-1."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @cached_property
    def k_axis(self) -> np.ndarray:
        return (np.pi / self.L) * self.index_axis

    @cached_property
    def x_axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x_axis] * self.d), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Full wavenumber tables k_j, Nyquist included (for even symbols)."""
        return tuple(np.meshgrid(*([self.k_axis] * self.d), indexing="ij"))

    @cached_property
    def odd_wavenumbers(self) -> tuple[np.ndarray, ...]:
        # Nyquist entry zeroed: odd symbols (i k, shifts) must keep real fields real.
        k = self.k_axis.copy()
        k[self.n // 2] = 0.0
        return tuple(np.meshgrid(*([k] * self.d), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(kj**2 for kj in self.wavenumbers)

    @cached_property
    def diag_k(self) -> np.ndarray:
        """Symbol K = sum_j k_j of the diagonal derivative O = sum_j d_j (without i)."""
        return sum(self.odd_wavenumbers)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.abs(self.index_axis) <= self.n // 3
        mask = keep
        for _ in range(self.d - 1):
            mask = np.multiply.outer(mask, keep)
        return mask

    @cached_property
    def k_max_retained(self) -> float:
        """max |K| over modes that survive the 2/3 rule."""
        return float(np.max(np.abs(self.diag_k[self.dealias_mask])))


def make_grid(d: int, n: int, L: float) -> GridSpec:
    return GridSpec(int(d), int(n), float(L))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field, shape (components, n, ..., n)."""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim == self.grid.d:
            c = c[None]
        if c.shape[1:] != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs[i : i + 1])

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, alpha: float) -> "SpectralField":
        return self.with_coeffs(alpha * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)

    def mean(self) -> np.ndarray:
        return self.coeffs[(slice(None),) + (0,) * self.grid.d].real.copy()

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    @classmethod
    def zeros(cls, grid: GridSpec, components: int = 1) -> "SpectralField":
        return cls(grid, np.zeros((components,) + grid.shape, dtype=np.complex128))


def _spatial_axes(grid: GridSpec) -> tuple[int, ...]:
    return tuple(range(-grid.d, 0))


def to_spectral(samples: np.ndarray, grid: GridSpec) -> SpectralField:
    """Forward transform of real samples with shape (n,)*d or (C, n, ..., n)."""
    f = np.asarray(samples, dtype=np.float64)
    if f.shape[-grid.d :] != grid.shape or f.ndim not in (grid.d, grid.d + 1):
        raise ValueError(f"sample shape {f.shape} does not match grid {grid.shape}")
    axes = _spatial_axes(grid)
    n = grid.n
    half = np.fft.rfftn(f, axes=axes) / n**grid.d
    # rebuild the full spectrum by reflection so it is exactly Hermitian
    full = np.empty(f.shape, dtype=np.complex128)
    full[..., : n // 2 + 1] = half
    mirror = np.conj(half[..., 1 : n - n // 2][..., ::-1])
    for ax in axes[:-1]:
        mirror = np.roll(np.flip(mirror, axis=ax), 1, axis=ax)
    full[..., n // 2 + 1 :] = mirror
    return SpectralField(grid, full)


def to_physical(f: SpectralField, *, check: bool = True) -> np.ndarray:
    """Real samples with shape (C, n, ..., n).

    Raises ValueError if the imaginary residue exceeds 1e-12 relative to
    sum |c_k|, which means the coefficients are not Hermitian.
    """
    z = np.fft.ifftn(f.coeffs, axes=_spatial_axes(f.grid)) * f.grid.n**f.grid.d
    if check:
        # sum |c_k| bounds max |f| and is the natural scale of FFT round-off,
        # which keeps differences of nearly equal fields from tripping the check
        scale = max(float(np.max(np.sum(np.abs(f.coeffs).reshape(f.components, -1), axis=1))), 1e-300)
        resid = float(np.max(np.abs(z.imag), initial=0.0))
        if resid > HERMITIAN_TOL * scale:
            raise ValueError(f"Hermitian symmetry violated: imaginary residue {resid / scale:.3e} (relative)")
    return np.ascontiguousarray(z.real)


def lp_norm(f: np.ndarray, p: float, grid: GridSpec) -> float:
    """Rectangle-rule L^p norm of physical samples.

    Vector data (leading component axis) uses the pointwise Euclidean magnitude.
    """
    if not p >= 1 or not np.isfinite(p):
        raise ValueError(f"p must be finite and >= 1, got {p}")
    a = np.asarray(f, dtype=np.float64)
    if a.ndim == grid.d + 1:
        a = np.sqrt(np.sum(a * a, axis=0)) if a.shape[0] > 1 else np.abs(a[0])
    else:
        a = np.abs(a)
    peak = float(np.max(a, initial=0.0))
    if peak == 0.0:
        return 0.0
    # scaling by the peak keeps |f|^p away from under/overflow for large p
    s = np.sum((a / peak) ** p) * grid.cell_volume
    return peak * float(s) ** (1.0 / p)


def field_lp_norm(f: SpectralField, p: float, *, check: bool = True) -> float:
    """L^p norm of a spectral field; pass check=False for differences of nearly equal fields."""
    return lp_norm(to_physical(f, check=check), p, f.grid)


def refined_lp_norm(f: SpectralField, p: float, factor: int = 16) -> float:
    """L^p norm with the rectangle rule on a grid refined ``factor`` times.

    The refined samples are the exact band-limited interpolant, so only the
    quadrature improves.  Needed when |f|^p is not smooth, e.g. the gradient
    magnitude of a bump behaves like |x|^p at its peak.
    """
    g = f.grid
    N = g.n * factor
    idx = g.index_axis % N
    big = np.zeros((f.components,) + (N,) * g.d, dtype=np.complex128)
    big[(slice(None),) + np.ix_(*([idx] * g.d))] = f.coeffs
    samples = np.fft.ifftn(big, axes=_spatial_axes(g)).real * N**g.d
    fine = GridSpec(g.d, N, g.L)
    return lp_norm(samples if f.components > 1 else samples[0], p, fine)


def spectral_gradient(f: SpectralField) -> tuple[SpectralField, ...]:
    """(d_1 f, ..., d_d f), each with the component count of f."""
    return tuple(f.with_coeffs(1j * kj * f.coeffs) for kj in f.grid.odd_wavenumbers)


def gradient_coeffs(f: SpectralField) -> np.ndarray:
    """Stacked gradient coefficients, shape (d * C, n, ..., n), component-major."""
    g = np.stack([1j * kj * f.coeffs for kj in f.grid.odd_wavenumbers], axis=1)
    return g.reshape((-1,) + f.grid.shape)


def dealias(f: SpectralField) -> SpectralField:
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask)


def boundary_mass(samples: np.ndarray, grid: GridSpec, frac: float = 0.05) -> float:
    """max |f| over the outer boundary layer, relative to max |f| overall."""
    a = np.abs(np.asarray(samples))
    if a.ndim == grid.d + 1:
        a = a.max(axis=0)
    peak = float(a.max(initial=0.0))
    if peak == 0.0:
        return 0.0
    edge = np.zeros(grid.shape, dtype=bool)
    for x in grid.coords:
        edge |= np.abs(x) >= (1.0 - frac) * grid.L
    return float(a[edge].max()) / peak
