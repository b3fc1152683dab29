"""Mild formulation of the rescaled vorticity equation and its Picard iteration.

The unknown y = Gamma^{-1} U solves

    y(t) = e^{t Delta} U0 + int_0^t e^{(t-s) Delta} M(y(s), s) ds,

with M(y, s) = Gamma^{-1}(s) [(K(Gamma(s) y) . grad) Gamma(s) y] in 2-D and an
extra stretching term -Gamma^{-1}(s) (Gamma(s) y . grad) K(Gamma(s) y) in 3-D.
The time integral is composite trapezoid on the solver grid; the heat kernel
is applied exactly as a multiplier, so only the integrand is discretised.

Cost per Picard step is O(nt^2 n^d) for the Duhamel sums plus nt+1
nonlinear evaluations; keep nt <= 128 at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .biot_savart import biot_savart
from .grid import GridSpec, SpectralField, dealias, gradient_coeffs, lp_norm, to_physical, to_spectral
from .noise import BrownianEnsemble, GammaPath, NoiseModel, eta_path, gamma_state_path, stopping_time
from .operators import DEFAULT_CAP, GammaState, gamma_apply, gamma_inverse_apply

__all__ = [
    "NonFiniteError",
    "SolverParams",
    "Trajectory",
    "ConvergenceReport",
    "nonlinear_term",
    "heat_trajectory",
    "picard_step",
    "picard_solve",
    "picard_solve_stopped",
    "zp_norm",
    "weighted_norms",
    "reconstruct",
]


class NonFiniteError(FloatingPointError):
    """NaN or Inf appeared in a field."""


@dataclass(frozen=True)
class SolverParams:
    d: int
    p: float
    gamma: float | None = None
    T: float = 1.0
    nt: int = 64
    tol: float = 1e-8
    max_iters: int = 50
    cap: float = DEFAULT_CAP

    def __post_init__(self):
        p, g = self.p, self.gamma
        if self.d == 2:
            if not 4.0 / 3.0 < p < 2.0:
                raise ValueError(f"p must lie in (4/3, 2) in 2-D, got p={p}")
            if g is None:
                raise ValueError("gamma is required in 2-D")
            lo, hi = 1.5 - 2.0 / p, 1.0 - 1.0 / p
            if not g > lo:
                raise ValueError(f"gamma must exceed 3/2 - 2/p = {lo:.6g}, got gamma={g}")
            if not g < hi:
                raise ValueError(f"gamma must be below 1 - 1/p = {hi:.6g}, got gamma={g}")
        elif self.d == 3:
            if not 1.5 < p < 2.0:
                raise ValueError(f"p must lie in (3/2, 2) in 3-D, got p={p}")
            if g is not None:
                raise ValueError("gamma is not used in 3-D; leave it unset")
        else:
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        if self.nt < 1:
            raise ValueError(f"nt must be >= 1, got {self.nt}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    @property
    def q(self) -> float:
        """Integrability of the nonlinearity: 2p/(4-p) in 2-D, 3p/(6-p) in 3-D."""
        p = self.p
        return 2 * p / (4 - p) if self.d == 2 else 3 * p / (6 - p)

    @property
    def r(self) -> float:
        """Integrability of the velocity: 2p/(2-p) in 2-D, 3p/(3-p) in 3-D."""
        p = self.p
        return 2 * p / (2 - p) if self.d == 2 else 3 * p / (3 - p)

    @property
    def crit(self) -> float:
        """Exponent of the initial-data norm: 1/(1-gamma) in 2-D, 3/2 in 3-D."""
        return 1.0 / (1.0 - self.gamma) if self.d == 2 else 1.5

    @property
    def weights(self) -> tuple[float, float]:
        """Time-weight exponents of |y|_p and |grad y|_p in the Z_p norm."""
        p = self.p
        if self.d == 2:
            return 1 - 1 / p - self.gamma, 1.5 - 1 / p - self.gamma
        return 1 - 1.5 / p, 1.5 * (1 - 1 / p)

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fields on the time grid; coeffs has shape (len(t_grid), C, n, ..., n)."""

    grid: GridSpec
    t_grid: np.ndarray
    coeffs: np.ndarray = field(repr=False)
    provenance: str = ""

    def __len__(self) -> int:
        return self.t_grid.size

    def __getitem__(self, k: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[k])

    @property
    def fields(self) -> list[SpectralField]:
        return [self[k] for k in range(len(self))]

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.grid, self.t_grid, self.coeffs - other.coeffs, self.provenance)

    def scaled(self, alpha: float) -> "Trajectory":
        return Trajectory(self.grid, self.t_grid, alpha * self.coeffs, self.provenance)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))


@dataclass
class ConvergenceReport:
    distances: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    residual: float = math.nan
    iterations: int = 0
    zp_norm: float = math.nan
    r_star: float = math.nan
    converged: bool = False
    diverged: bool = False
    non_finite: bool = False
    message: str = ""

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["max_ratio"] = self.max_ratio
        return out


def _check_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"non-finite values in {what}")


def _nonlinear_coeffs(grid: GridSpec, y: np.ndarray, g: GammaState, cap: float) -> np.ndarray:
    u = gamma_apply(SpectralField(grid, y), g, cap)
    X = biot_savart(u)
    Xp = to_physical(X, check=False)
    gu = to_physical(SpectralField(grid, gradient_coeffs(u)), check=False)  # (C*d, ...)
    d = grid.d
    C = u.components
    gu = gu.reshape((C, d) + grid.shape)  # gu[c, j] = d_j u_c
    adv = np.einsum("j...,cj...->c...", Xp, gu)
    if d == 3:
        up = to_physical(u, check=False)
        gX = to_physical(SpectralField(grid, gradient_coeffs(X)), check=False).reshape((3, 3) + grid.shape)
        adv = adv - np.einsum("j...,cj...->c...", up, gX)
    _check_finite(adv, "nonlinear term")
    out = dealias(to_spectral(adv, grid))
    return gamma_inverse_apply(out, g).coeffs


def nonlinear_term(y: SpectralField, g: GammaState, d: int | None = None, cap: float = DEFAULT_CAP) -> SpectralField:
    grid = y.grid
    if d is not None and d != grid.d:
        raise ValueError(f"dimension {d} does not match the grid ({grid.d})")
    want = 1 if grid.d == 2 else 3
    if y.components != want:
        raise ValueError(f"vorticity must have {want} component(s) in {grid.d}-D, got {y.components}")
    _check_finite(y.coeffs, "input field")
    return SpectralField(grid, _nonlinear_coeffs(grid, y.coeffs, g, cap))


def heat_trajectory(U0: SpectralField, t_grid) -> Trajectory:
    t = np.asarray(t_grid, dtype=np.float64)
    decay = np.exp(-t[:, None] * U0.grid.k2.reshape(1, -1)).reshape((t.size, 1) + U0.grid.shape)
    return Trajectory(U0.grid, t, decay * U0.coeffs[None], "heat")


def _trapezoid_weights(t: np.ndarray) -> np.ndarray:
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


class _HeatTable:
    """exp(-(t_k - t_j) |k|^2) for all j <= k, shared across Picard steps."""

    def __init__(self, grid: GridSpec, t: np.ndarray):
        self.t = t
        self.k2 = grid.k2
        dt = np.diff(t)
        self.uniform = bool(np.allclose(dt, dt[0], rtol=1e-12, atol=0.0))
        if self.uniform:
            self.table = np.exp(-(dt[0] * np.arange(t.size))[:, None] * grid.k2.reshape(1, -1)).reshape(
                (t.size,) + grid.shape
            )

    def row(self, k: int) -> np.ndarray:
        if self.uniform:
            return self.table[k::-1]
        lag = self.t[k] - self.t[: k + 1]
        return np.exp(-lag.reshape((-1,) + (1,) * self.k2.ndim) * self.k2)


_TABLES: dict = {}


def _heat_table(grid: GridSpec, t: np.ndarray) -> _HeatTable:
    key = (grid, t.size, float(t[-1]), hash(t.tobytes()))
    tab = _TABLES.get(key)
    if tab is None:
        if len(_TABLES) > 8:
            _TABLES.clear()
        tab = _TABLES[key] = _HeatTable(grid, t)
    return tab


def duhamel(U0: SpectralField, nonlin: np.ndarray, t: np.ndarray) -> np.ndarray:
    """e^{t_k Delta} U0 + trapezoid sum of e^{(t_k - s_j) Delta} nonlin_j over s_j <= t_k."""
    grid = U0.grid
    table = _heat_table(grid, t)
    out = heat_trajectory(U0, t).coeffs.copy()
    for k in range(1, t.size):
        w = _trapezoid_weights(t[: k + 1])
        kern = table.row(k) * w.reshape((-1,) + (1,) * grid.d)
        out[k] += np.einsum("j...,jc...->c...", kern, nonlin[: k + 1])
    return out


def picard_step(y: Trajectory, gammas: GammaPath, U0: SpectralField, params: SolverParams) -> Trajectory:
    t = y.t_grid
    if len(gammas) != t.size or not np.allclose(gammas.t_grid, t):
        raise ValueError("trajectory and rescaling path use different time grids")
    nonlin = np.stack([_nonlinear_coeffs(y.grid, y.coeffs[j], gammas[j], params.cap) for j in range(t.size)])
    return Trajectory(y.grid, t, duhamel(U0, nonlin, t), y.provenance)


def weighted_norms(y: Trajectory, params: SolverParams) -> dict[str, np.ndarray]:
    """Per-time |y|_p, |grad y|_p, |y|_crit and the two Z_p weights applied."""
    grid = y.grid
    p = params.p
    w0, w1 = params.weights
    t = y.t_grid
    lp = np.empty(t.size)
    glp = np.empty(t.size)
    crit = np.empty(t.size)
    for k in range(t.size):
        f = y[k]
        phys = to_physical(f, check=False)
        lp[k] = lp_norm(phys, p, grid)
        crit[k] = lp_norm(phys, params.crit, grid)
        glp[k] = lp_norm(to_physical(SpectralField(grid, gradient_coeffs(f)), check=False), p, grid)
    with np.errstate(divide="ignore"):
        tw0 = np.where(t > 0, t**w0, 0.0)
        tw1 = np.where(t > 0, t**w1, 0.0)
    return {"lp": lp, "grad_lp": glp, "crit": crit, "weighted_lp": tw0 * lp, "weighted_grad_lp": tw1 * glp}


def zp_norm(y: Trajectory, params: SolverParams) -> float:
    """sup over grid times t > 0 of t^{w0} |y(t)|_p + t^{w1} |grad y(t)|_p."""
    nrm = weighted_norms(y, params)
    s = nrm["weighted_lp"][1:] + nrm["weighted_grad_lp"][1:]
    return float(np.max(s)) if s.size else 0.0


def _t_grid_for(params: SolverParams, gammas: GammaPath | None) -> np.ndarray:
    return params.t_grid if gammas is None else np.asarray(gammas.t_grid)


def picard_solve(
    U0: SpectralField, params: SolverParams, gammas: GammaPath | None = None
) -> tuple[Trajectory, ConvergenceReport]:
    """Iterate y_{n+1} = G(y_n) from the heat flow of U0.

    Stops when the Z_p distance drops below params.tol.  Three consecutive
    ratios >= 1, or a non-finite iterate, set ``diverged`` in the report.
    """
    if U0.grid.d != params.d:
        raise ValueError(f"initial condition is {U0.grid.d}-D but params are {params.d}-D")
    _check_finite(U0.coeffs, "initial condition")
    t = _t_grid_for(params, gammas)
    if gammas is None:
        gammas = GammaPath.identity(t)
    report = ConvergenceReport()
    y = heat_trajectory(U0, t)
    y = Trajectory(y.grid, y.t_grid, y.coeffs, "picard")
    streak = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, params.max_iters + 1):
            report.iterations = it
            try:
                y_new = picard_step(y, gammas, U0, params)
                if not y_new.is_finite():
                    raise NonFiniteError("non-finite Picard iterate")
                dist = zp_norm(y_new - y, params)
                if not math.isfinite(dist):
                    raise NonFiniteError("non-finite Picard distance")
            except NonFiniteError as exc:
                report.non_finite = report.diverged = True
                report.message = str(exc)
                break
            if report.distances and report.distances[-1] > 0:
                ratio = dist / report.distances[-1]
                report.ratios.append(ratio)
                streak = streak + 1 if ratio >= 1 else 0
            report.distances.append(dist)
            y = y_new
            if dist < params.tol:
                report.converged = True
                break
            if streak >= 3:
                report.diverged = True
                report.message = "three consecutive contraction ratios >= 1"
                break
        else:
            report.message = "max_iters reached"
        if not report.non_finite:
            try:
                g_y = picard_step(y, gammas, U0, params)
                report.residual = zp_norm(g_y - y, params)
                report.zp_norm = zp_norm(y, params)
                report.r_star = float(np.max(weighted_norms(y, params)["weighted_lp"]))
            except NonFiniteError as exc:
                report.non_finite = report.diverged = True
                report.message = str(exc)
    if report.converged and not report.message:
        report.message = "converged"
    return y, report


def reconstruct(y: Trajectory, gammas: GammaPath, cap: float = DEFAULT_CAP) -> tuple[Trajectory, Trajectory]:
    """U(t) = Gamma(t) y(t) and X(t) = K(U(t)) on every grid time."""
    U = np.stack([gamma_apply(y[k], gammas[k], cap).coeffs for k in range(len(y))])
    X = np.stack([biot_savart(SpectralField(y.grid, U[k])).coeffs for k in range(len(y))])
    return (
        Trajectory(y.grid, y.t_grid, U, "vorticity"),
        Trajectory(y.grid, y.t_grid, X, "velocity"),
    )


def picard_solve_stopped(
    U0: SpectralField,
    r: float,
    params: SolverParams,
    model: NoiseModel,
    ens: BrownianEnsemble,
    bound: float,
    *,
    eta: np.ndarray | None = None,
) -> tuple[Trajectory, ConvergenceReport, float]:
    """Solve up to tau_r = inf{t : eta_t >= r} and hold y(tau_r) afterwards.

    ``bound`` is the measured smallness constant C; deterministic data must
    satisfy |U0|_crit <= C / r.  ``eta`` overrides the path weight (testing).
    Returns (trajectory, report, tau_r).
    """
    norm = lp_norm(to_physical(U0), params.crit, U0.grid)
    if norm > bound / r:
        raise ValueError(
            f"stopped solve needs |U0|_{params.crit:.4g} <= C/r = {bound:.6g}/{r:.6g} = {bound / r:.6g}, got {norm:.6g}"
        )
    gammas = gamma_state_path(model, ens)
    t = np.asarray(gammas.t_grid)
    if eta is None:
        eta, _ = eta_path(model, ens)
    tau = stopping_time(eta, r, t)
    if not math.isfinite(tau) or tau >= t[-1]:
        y, report = picard_solve(U0, params, gammas)
        return y, report, tau
    k_tau = int(np.searchsorted(t, tau))
    coeffs = np.empty((t.size,) + U0.coeffs.shape, dtype=np.complex128)
    report = ConvergenceReport(converged=True, message="stopped at t=0", residual=0.0, iterations=0)
    if k_tau == 0:
        coeffs[:] = U0.coeffs
    else:
        y_head, report = picard_solve(U0, params, gammas.truncate(k_tau))
        coeffs[: k_tau + 1] = y_head.coeffs
        coeffs[k_tau + 1 :] = y_head.coeffs[k_tau]
    return Trajectory(U0.grid, t, coeffs, f"stopped at tau_r={tau:.6g}"), report, tau
