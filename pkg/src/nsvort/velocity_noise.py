"""Velocity-level noise operators and the curl commutation check.

In 2-D the coefficients of A_i grow linearly in the space variable, so the
products are formed in physical space on the torus coordinates.  Test fields
must sit well inside the box (see :func:`nsvort.grid.boundary_mass`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .biot_savart import curl, divergence
from .grid import SpectralField, dealias, field_lp_norm, to_physical, to_spectral

__all__ = ["Coefficients2D", "apply_A_2d", "apply_A_3d", "apply_A", "curl_commutation_residual"]

DIV_FREE_TOL = 1e-10


@dataclass(frozen=True)
class Coefficients2D:
    """(sigma_i, mu_i, theta_i) for one channel; mu is ignored in 3-D."""

    sigma: float
    mu: float = 0.0
    theta: float = 1.0

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")


def apply_A_2d(X: SpectralField, coef: Coefficients2D) -> SpectralField:
    grid = X.grid
    if grid.d != 2 or X.components != 2:
        raise ValueError("apply_A_2d needs a 2-component field on a 2-D grid")
    k1, k2 = grid.odd_wavenumbers
    # dX[j][i] = d_j X_i in physical space
    d1 = to_physical(X.with_coeffs(1j * k1 * X.coeffs))
    d2 = to_physical(X.with_coeffs(1j * k2 * X.coeffs))
    x1, x2 = grid.coords
    s, mu, th = coef.sigma, coef.mu, coef.theta
    a3 = mu * x1 - th * x2
    a4 = th * x1 + mu * x2
    row1 = s * (d1[0] + d2[0]) + a3 * d1[1] + a4 * d2[1]
    row2 = -a3 * d1[0] - a4 * d2[0] + s * (d1[1] + d2[1])
    return dealias(to_spectral(np.stack([row1, row2]), grid))


def apply_A_3d(X: SpectralField, sigma: float, theta: float) -> SpectralField:
    """sigma 1_3 . grad X + theta X, exact on band-limited X."""
    grid = X.grid
    if grid.d != 3 or X.components != 3:
        raise ValueError("apply_A_3d needs a 3-component field on a 3-D grid")
    return X.with_coeffs((1j * sigma * grid.diag_k + theta) * X.coeffs)


def apply_A(X: SpectralField, coef: Coefficients2D) -> SpectralField:
    if X.grid.d == 2:
        return apply_A_2d(X, coef)
    return apply_A_3d(X, coef.sigma, coef.theta)


def curl_commutation_residual(X: SpectralField, coef: Coefficients2D) -> float:
    """L^2 norm of curl(A X) - (sigma O + theta) curl X for divergence-free X."""
    div = field_lp_norm(divergence(X), 2, check=False)
    if div > DIV_FREE_TOL:
        raise ValueError(f"input is not divergence free: |div X|_2 = {div:.3e} > {DIV_FREE_TOL:g}")
    U = curl(X)
    lhs = curl(apply_A(X, coef))
    rhs = U.with_coeffs((1j * coef.sigma * X.grid.diag_k + coef.theta) * U.coeffs)
    if X.grid.d == 2:
        rhs = dealias(rhs)
    return field_lp_norm(lhs - rhs, 2, check=False)
