"""Brownian paths, the noise model and the path functionals built from them:
the rescaling triple (a, c, m), the weight eta_t and the stopping time tau_r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .operators import GammaState

__all__ = [
    "SigmaSpec",
    "NoiseModel",
    "BrownianEnsemble",
    "Accumulators",
    "GammaPath",
    "sample_brownian",
    "gamma_state_path",
    "eta_path",
    "eta_tail_factor",
    "stopping_time",
]

SIGMA_KINDS = ("constant", "exponential")


@dataclass(frozen=True)
class SigmaSpec:
    """Built-in sigma(t).

    ``constant``: sigma0 on [0, t0], zero afterwards (t0=inf keeps it on).
    ``exponential``: sigma0 * exp(-rate t).
    """

    kind: str = "constant"
    sigma0: float = 0.0
    t0: float = math.inf
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in SIGMA_KINDS:
            raise ValueError(f"unknown sigma kind {self.kind!r}; expected one of {SIGMA_KINDS}")
        if self.kind == "exponential" and not self.rate > 0:
            raise ValueError("exponential sigma needs rate > 0 (square integrability on [0, inf))")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "constant":
            return np.where(t <= self.t0, self.sigma0, 0.0)
        return self.sigma0 * np.exp(-self.rate * t)


@dataclass(frozen=True)
class NoiseModel:
    theta: tuple[float, ...]
    sigma: tuple[SigmaSpec, ...]
    sigma_budget: float = math.inf

    def __post_init__(self):
        theta = tuple(float(v) for v in self.theta)
        sigma = tuple(self.sigma)
        if len(theta) != len(sigma):
            raise ValueError(f"theta has {len(theta)} channels but sigma has {len(sigma)}")
        if any(not (v >= 0 and math.isfinite(v)) for v in theta):
            raise ValueError(f"theta_i must be finite and >= 0, got {theta}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma", sigma)

    @property
    def N(self) -> int:
        return len(self.theta)

    @classmethod
    def constant(cls, theta: Sequence[float], sigma0: float | Sequence[float] = 0.0) -> "NoiseModel":
        theta = tuple(theta)
        s0 = [sigma0] * len(theta) if np.isscalar(sigma0) else list(sigma0)
        return cls(theta, tuple(SigmaSpec("constant", float(s)) for s in s0))

    def sigma_table(self, t_grid: np.ndarray) -> np.ndarray:
        return np.stack([s(t_grid) for s in self.sigma]) if self.N else np.zeros((0, len(t_grid)))

    def energy(self, t_grid: np.ndarray) -> float:
        """Trapezoid value of sum_i int_0^T sigma_i^2 ds over the grid."""
        s2 = self.sigma_table(t_grid) ** 2
        dt = np.diff(t_grid)
        return float(np.sum(0.5 * (s2[:, 1:] + s2[:, :-1]) * dt))

    def check_budget(self, t_grid: np.ndarray) -> None:
        e = self.energy(t_grid)
        if e > self.sigma_budget:
            raise ValueError(f"sum_i int sigma_i^2 ds = {e:.6g} exceeds the configured budget {self.sigma_budget:.6g}")


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=np.float64)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("time grid needs at least two points")
    if t[0] != 0.0:
        raise ValueError(f"time grid must start at 0, got {t[0]}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t


@dataclass(frozen=True, eq=False)
class BrownianEnsemble:
    """N Brownian paths sampled on a time grid; beta has shape (N, len(t_grid))."""

    t_grid: np.ndarray
    beta: np.ndarray
    seed: int | None = None

    @property
    def N(self) -> int:
        return self.beta.shape[0]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.beta, axis=1)

    @classmethod
    def from_paths(cls, t_grid, beta) -> "BrownianEnsemble":
        """Wrap a prescribed (e.g. deterministic) path; beta(0) must be 0."""
        t = _check_grid(t_grid)
        b = np.atleast_2d(np.asarray(beta, dtype=np.float64))
        if b.shape[1] != t.size:
            raise ValueError("path length does not match the time grid")
        if np.any(b[:, 0] != 0.0):
            raise ValueError("Brownian paths must start at 0")
        return cls(t, b)

    def subsample(self, stride: int) -> "BrownianEnsemble":
        return BrownianEnsemble(self.t_grid[::stride], self.beta[:, ::stride], self.seed)

    def accumulate(self, model: NoiseModel) -> "Accumulators":
        if model.N != self.N:
            raise ValueError(f"noise model has {model.N} channels but ensemble has {self.N}")
        t = self.t_grid
        sig = model.sigma_table(t)
        dt = np.diff(t)
        zero = np.zeros((self.N, 1))
        ito = np.concatenate([zero, np.cumsum(sig[:, :-1] * self.increments, axis=1)], axis=1)
        drift = np.concatenate([zero, np.cumsum(0.5 * (sig[:, 1:] + sig[:, :-1]) * dt, axis=1)], axis=1)
        s2 = sig**2
        energy = np.concatenate([zero, np.cumsum(0.5 * (s2[:, 1:] + s2[:, :-1]) * dt, axis=1)], axis=1)
        return Accumulators(ito=ito, drift=drift, energy=energy)


@dataclass(frozen=True, eq=False)
class Accumulators:
    """Per-channel running integrals on the grid: int sigma dbeta (Ito, left
    point), int sigma ds and int sigma^2 ds (trapezoid)."""

    ito: np.ndarray
    drift: np.ndarray
    energy: np.ndarray


def _channel_normals(seed: int, channel: int, count: int) -> np.ndarray:
    # Philox is counter based: the stream for (seed, channel) does not depend
    # on how many other channels or seeds are drawn.
    bitgen = np.random.Philox(key=np.array([seed & 0xFFFFFFFFFFFFFFFF, channel], dtype=np.uint64))
    return np.random.Generator(bitgen).standard_normal(count)


def sample_brownian(seed: int, t_grid, N: int) -> BrownianEnsemble:
    t = _check_grid(t_grid)
    if N < 0:
        raise ValueError("number of channels must be >= 0")
    sq = np.sqrt(np.diff(t))
    beta = np.zeros((N, t.size))
    for i in range(N):
        beta[i, 1:] = np.cumsum(sq * _channel_normals(int(seed), i, t.size - 1))
    return BrownianEnsemble(t, beta, int(seed))


@dataclass(frozen=True, eq=False)
class GammaPath:
    """The triple (a, c, m) on every grid time."""

    t_grid: np.ndarray
    a: np.ndarray
    c: np.ndarray
    m: np.ndarray

    def __len__(self) -> int:
        return self.t_grid.size

    def __getitem__(self, k: int) -> GammaState:
        return GammaState(float(self.a[k]), float(self.c[k]), float(self.m[k]))

    def at(self, t: float) -> GammaState:
        """Linear interpolation between grid times."""
        tg = self.t_grid
        return GammaState(
            float(np.interp(t, tg, self.a)), float(np.interp(t, tg, self.c)), float(np.interp(t, tg, self.m))
        )

    def truncate(self, k: int) -> "GammaPath":
        return GammaPath(self.t_grid[: k + 1], self.a[: k + 1], self.c[: k + 1], self.m[: k + 1])

    @classmethod
    def identity(cls, t_grid) -> "GammaPath":
        t = np.asarray(t_grid, dtype=np.float64)
        z = np.zeros_like(t)
        return cls(t, z, z.copy(), z.copy())


def gamma_state_path(model: NoiseModel, ens: BrownianEnsemble) -> GammaPath:
    acc = ens.accumulate(model)
    theta = np.asarray(model.theta)[:, None]
    t = ens.t_grid
    a = np.sum(acc.ito - theta * acc.drift, axis=0)
    c = 0.5 * np.sum(acc.energy, axis=0)
    m = np.sum(theta * ens.beta - 0.5 * theta**2 * t[None, :], axis=0)
    return GammaPath(t.copy(), a, c, m)


def eta_path(model: NoiseModel, ens: BrownianEnsemble) -> tuple[np.ndarray, float]:
    """eta_t = exp(max_{s<=t} sum_i [theta_i beta_i(s) - s theta_i^2 / 4]) and its horizon maximum."""
    if model.N != ens.N:
        raise ValueError(f"noise model has {model.N} channels but ensemble has {ens.N}")
    theta = np.asarray(model.theta)[:, None]
    expo = np.sum(theta * ens.beta - 0.25 * theta**2 * ens.t_grid[None, :], axis=0)
    eta = np.exp(np.maximum.accumulate(expo))
    return eta, float(eta[-1])


def eta_tail_factor(model: NoiseModel, T: float) -> float:
    """exp(-(T/4) min theta^2): heuristic size of what the horizon may miss."""
    if model.N == 0:
        return 0.0
    return math.exp(-0.25 * T * min(model.theta) ** 2)


def stopping_time(eta: np.ndarray, r: float, t_grid) -> float:
    """First grid time with eta_t >= r, or math.inf."""
    if not r > 0:
        raise ValueError(f"threshold r must be positive, got {r}")
    hit = np.nonzero(np.asarray(eta) >= r)[0]
    return float(np.asarray(t_grid)[hit[0]]) if hit.size else math.inf
