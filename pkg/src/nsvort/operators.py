"""Linear Fourier-multiplier operators: heat flow, diagonal translations,
diagonal diffusion and the random rescaling built from them.

Every noise operator is sigma(t) * O with O = sum_j d_j, whose symbol is i*K,
K = sum_j k_j.  So exp(s*O) is a shift along the diagonal, exp(c*O^2) is heat
flow along the diagonal (symbol exp(-c K^2)) and the rescaling collapses to
the single multiplier exp(m) * exp(i a K + c K^2), see :class:`GammaState`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import SpectralField

__all__ = [
    "DEFAULT_CAP",
    "AmplificationCapError",
    "GammaState",
    "heat_apply",
    "translate_group",
    "diagonal_heat",
    "diagonal_heat_inverse",
    "resolvent_diagonal",
    "gamma_apply",
    "gamma_inverse_apply",
    "amplification",
]

DEFAULT_CAP = math.log(1e12)


class AmplificationCapError(ValueError):
    """The amplifying multiplier exp(c K^2) would exceed the configured cap."""


@dataclass(frozen=True)
class GammaState:
    """Scalar triple fixing the rescaling at one time.

    a: diagonal shift, c: diagonal diffusion budget (>= 0), m: log scalar gain.
    """

    a: float = 0.0
    c: float = 0.0
    m: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.c) and math.isfinite(self.m)):
            raise ValueError(f"non-finite GammaState {self}")
        if self.c < 0:
            raise ValueError(f"diffusion budget c must be >= 0, got {self.c}")


def heat_apply(f: SpectralField, t: float) -> SpectralField:
    if t < 0:
        raise ValueError(f"heat flow needs t >= 0, got {t}")
    if t == 0:
        return f
    return f.with_coeffs(f.coeffs * np.exp(-t * f.grid.k2))


def translate_group(f: SpectralField, shift: float) -> SpectralField:
    """output(xi) = f(xi + shift * 1_d)."""
    if shift == 0:
        return f
    return f.with_coeffs(f.coeffs * np.exp(1j * shift * f.grid.diag_k))


def diagonal_heat(f: SpectralField, c: float) -> SpectralField:
    if c < 0:
        raise ValueError(f"diffusion budget c must be >= 0, got {c}")
    if c == 0:
        return f
    return f.with_coeffs(f.coeffs * np.exp(-c * f.grid.diag_k**2))


def amplification(grid, c: float) -> float:
    """Log-amplification c * K_max^2 of exp(c K^2) on retained modes."""
    return c * grid.k_max_retained**2


def _check_cap(grid, c: float, cap: float) -> None:
    amp = amplification(grid, c)
    if amp > cap:
        idx = np.unravel_index(
            np.argmax(np.where(grid.dealias_mask, np.abs(grid.diag_k), -1.0)), grid.shape
        )
        mode = tuple(int(grid.index_axis[i]) for i in idx)
        raise AmplificationCapError(
            f"exp(c K^2) with c={c:.6g} reaches log-amplification {amp:.4g} > cap {cap:.4g} "
            f"at mode index {mode} (K={grid.k_max_retained:.6g}); refine L, n or reduce the noise budget"
        )


def diagonal_heat_inverse(f: SpectralField, c: float, cap: float = DEFAULT_CAP) -> SpectralField:
    """Left inverse exp(+c K^2) of :func:`diagonal_heat`, restricted to retained modes."""
    if c < 0:
        raise ValueError(f"diffusion budget c must be >= 0, got {c}")
    if c == 0:
        return f
    _check_cap(f.grid, c, cap)
    mask = f.grid.dealias_mask
    mult = np.exp(c * np.where(mask, f.grid.diag_k**2, 0.0)) * mask
    return f.with_coeffs(f.coeffs * mult)


def resolvent_diagonal(f: SpectralField, lam: float) -> SpectralField:
    """Solve (lam I - O^2) g = f."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return f.with_coeffs(f.coeffs / (lam + f.grid.diag_k**2))


def gamma_apply(f: SpectralField, g: GammaState, cap: float = DEFAULT_CAP) -> SpectralField:
    """Rescaling multiplier exp(m) exp(i a K + c K^2); output lives on retained modes."""
    grid = f.grid
    _check_cap(grid, g.c, cap)
    K = grid.diag_k
    expo = g.m + 1j * g.a * K + g.c * np.where(grid.dealias_mask, K**2, 0.0)
    return f.with_coeffs(f.coeffs * np.exp(expo) * grid.dealias_mask)


def gamma_inverse_apply(f: SpectralField, g: GammaState) -> SpectralField:
    K = f.grid.diag_k
    return f.with_coeffs(f.coeffs * np.exp(-g.m - 1j * g.a * K - g.c * K**2))
