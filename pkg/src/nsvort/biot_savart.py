"""Biot-Savart reconstruction, curl and divergence as Fourier multipliers.

On the torus the mean vorticity has no periodic stream function, so the k = 0
mode is dropped: curl(K(U)) = U - mean(U).  :func:`biot_savart_2d_free`
evaluates the whole-plane kernel instead (zero padding with a truncated
Green's function), for fields with nonzero circulation.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import j0, j1

from .grid import GridSpec, SpectralField, to_physical

__all__ = [
    "biot_savart_2d",
    "biot_savart_3d",
    "biot_savart",
    "biot_savart_2d_free",
    "curl",
    "divergence",
]


def _inverse_k2(grid: GridSpec) -> np.ndarray:
    k2 = grid.k2.copy()
    k2[(0,) * grid.d] = 1.0
    inv = 1.0 / k2
    inv[(0,) * grid.d] = 0.0
    return inv


def biot_savart_2d(U: SpectralField) -> SpectralField:
    """Velocity grad^perp Delta^{-1} U: symbols (i k_2, -i k_1) / |k|^2."""
    if U.grid.d != 2 or U.components != 1:
        raise ValueError("biot_savart_2d expects a scalar field on a 2-D grid")
    k1, k2 = U.grid.odd_wavenumbers
    psi = U.coeffs[0] * _inverse_k2(U.grid)
    return U.with_coeffs(np.stack([1j * k2 * psi, -1j * k1 * psi]))


def biot_savart_3d(U: SpectralField) -> SpectralField:
    """Velocity curl (-Delta)^{-1} U: symbol i k x U_hat / |k|^2."""
    if U.grid.d != 3 or U.components != 3:
        raise ValueError("biot_savart_3d expects a 3-component field on a 3-D grid")
    k = U.grid.odd_wavenumbers
    A = U.coeffs * _inverse_k2(U.grid)
    return U.with_coeffs(_cross_ik(k, A))


def biot_savart(U: SpectralField) -> SpectralField:
    return biot_savart_2d(U) if U.grid.d == 2 else biot_savart_3d(U)


def _cross_ik(k, A: np.ndarray) -> np.ndarray:
    return 1j * np.stack(
        [
            k[1] * A[2] - k[2] * A[1],
            k[2] * A[0] - k[0] * A[2],
            k[0] * A[1] - k[1] * A[0],
        ]
    )


def curl(X: SpectralField) -> SpectralField:
    d = X.grid.d
    if X.components != d:
        raise ValueError(f"curl needs {d} velocity components, got {X.components}")
    k = X.grid.odd_wavenumbers
    if d == 2:
        return X.with_coeffs(1j * (k[0] * X.coeffs[1] - k[1] * X.coeffs[0]))
    return X.with_coeffs(_cross_ik(k, X.coeffs))


def divergence(X: SpectralField) -> SpectralField:
    d = X.grid.d
    if X.components != d:
        raise ValueError(f"divergence needs {d} velocity components, got {X.components}")
    k = X.grid.odd_wavenumbers
    return X.with_coeffs(sum(1j * k[j] * X.coeffs[j] for j in range(d)))


@lru_cache(maxsize=8)
def _free_space_symbol(n: int, L: float, pad: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Truncated log kernel -1/(2 pi) log|x| 1_{|x|<R}; its transform is smooth,
    # so a padded periodic convolution reproduces the whole-plane result.
    R = 2.0 * np.sqrt(2.0) * L
    big = pad * n
    k = (np.pi / (pad * L)) * np.fft.fftfreq(big, d=1.0 / big)
    k_odd = k.copy()
    k_odd[big // 2] = 0.0
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    kk = np.sqrt(K1**2 + K2**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        G = (1.0 - j0(R * kk)) / kk**2 - R * np.log(R) * j1(R * kk) / kk
    G[0, 0] = R**2 * (1.0 - 2.0 * np.log(R)) / 4.0
    O1, O2 = np.meshgrid(k_odd, k_odd, indexing="ij")
    return G, O1, O2


def biot_savart_2d_free(U: SpectralField, pad: int = 4, points=None) -> np.ndarray:
    """Whole-plane Biot-Savart velocity.

    Returns samples on the grid, shape (2, n, n), or, when ``points`` (shape
    (P, 2)) is given, the velocity at those points, shape (2, P), evaluated as
    the trigonometric series of the padded periodic problem.
    U must be supported (to round-off) inside [-L, L)^2.  The result is not
    periodic, so it is returned as physical values rather than a SpectralField.
    """
    grid = U.grid
    if grid.d != 2 or U.components != 1:
        raise ValueError("biot_savart_2d_free expects a scalar field on a 2-D grid")
    n = grid.n
    big = pad * n
    G, O1, O2 = _free_space_symbol(n, grid.L, pad)
    w = np.zeros((big, big))
    w[:n, :n] = to_physical(U)[0]
    # both transforms share the -L origin offset, so the phases cancel and the
    # quadrature weight h^2 cancels against the 1/S^2 of the Fourier series
    psi_hat = G * np.fft.fft2(w)
    v1, v2 = 1j * O2 * psi_hat, -1j * O1 * psi_hat
    if points is None:
        return np.stack([np.fft.ifft2(v1).real[:n, :n], np.fft.ifft2(v2).real[:n, :n]])
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64)) + grid.L
    out = np.empty((2, pts.shape[0]))
    for i, (a, b) in enumerate(pts):
        phase = np.exp(1j * (O1 * a + O2 * b)) / big**2
        out[0, i] = np.sum(v1 * phase).real
        out[1, i] = np.sum(v2 * phase).real
    return out
