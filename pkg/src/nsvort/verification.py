"""Measured constants and certified inequalities.

None of the constants entering the smallness criterion is assumed: heat
estimate constants, the amplification of the rescaling, Riesz and
Calderon-Zygmund constants are all measured on the configured grid over a
probe family, so every pass/fail statement is relative to that grid.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .biot_savart import biot_savart
from .fields import gaussian
from .grid import GridSpec, SpectralField, gradient_coeffs, lp_norm, to_physical
from .noise import GammaPath, NoiseModel, sample_brownian
from .operators import DEFAULT_CAP, AmplificationCapError, heat_apply
from .solver import (
    SolverParams,
    Trajectory,
    _nonlinear_coeffs,
    heat_trajectory,
    picard_solve,
    picard_step,
    weighted_norms,
    zp_norm,
)

__all__ = [
    "beta_function",
    "HeatConstant",
    "measure_heat_constant",
    "default_probes",
    "heat_constants",
    "heat_zp_constant",
    "measure_amplification",
    "SmallnessReport",
    "smallness_report",
    "heat_gaussian_lp_norm",
    "decay_exponent_fit",
    "lipschitz_probe",
    "gamma_sde_consistency",
    "measure_riesz_constant",
    "measure_cz_constant",
    "quadratic_constant",
    "global_bound",
    "rk4_reference",
]


def beta_function(x: float, y: float) -> float:
    if not (x > 0 and y > 0):
        raise ValueError(f"beta function needs positive arguments, got ({x}, {y})")
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


@dataclass(frozen=True)
class HeatConstant:
    value: float
    probe: int
    t_at_max: float
    t_min: float
    exponent: float


def _grad_phys(f: SpectralField) -> np.ndarray:
    return to_physical(SpectralField(f.grid, gradient_coeffs(f)), check=False)


def measure_heat_constant(
    alpha: float,
    beta: float,
    probes: list[SpectralField],
    *,
    derivative: bool = False,
    t_min: float = 1.0 / 64,
    t_max: float = 1.0,
    num_t: int = 48,
) -> HeatConstant:
    """Smallest c with |D e^{t Delta} g|_beta <= c t^e |g|_alpha over probes and a log grid of t.

    e = (d/2)(1/beta - 1/alpha), minus 1/2 when ``derivative`` (D = grad).
    Times below ``t_min`` are not scanned; the scan boundary is reported.
    """
    if not probes:
        raise ValueError("empty probe set")
    if not 1 < alpha <= beta < math.inf:
        raise ValueError(f"need 1 < alpha <= beta < inf, got alpha={alpha}, beta={beta}")
    d = probes[0].grid.d
    e = 0.5 * d * (1 / beta - 1 / alpha) - (0.5 if derivative else 0.0)
    ts = np.geomspace(t_min, t_max, num_t)
    best = HeatConstant(0.0, -1, math.nan, t_min, e)
    for i, g in enumerate(probes):
        base = lp_norm(to_physical(g), alpha, g.grid)
        if base == 0:
            continue
        for t in ts:
            h = heat_apply(g, float(t))
            phys = _grad_phys(h) if derivative else to_physical(h, check=False)
            val = lp_norm(phys, beta, g.grid) / (t**e * base)
            if val > best.value:
                best = HeatConstant(float(val), i, float(t), t_min, e)
    return best


def default_probes(grid: GridSpec, widths=(0.75, 1.0, 1.5, 2.0)) -> list[SpectralField]:
    """Centred Gaussians of several widths (vector-valued in 3-D: one nonzero component)."""
    out = []
    for w in widths:
        g = gaussian(grid, 1.0, w)
        if grid.d == 3:
            c = np.zeros((3,) + grid.shape, dtype=np.complex128)
            c[2] = g.coeffs[0]
            g = SpectralField(grid, c)
        out.append(g)
    return out


def heat_constants(params: SolverParams, probes: list[SpectralField]) -> dict[str, HeatConstant]:
    """Heat constants for every (alpha, beta) pair the estimates use."""
    kw = dict(t_min=params.T / params.nt, t_max=params.T)
    return {
        "nonlinear_value": measure_heat_constant(params.q, params.p, probes, **kw),
        "nonlinear_grad": measure_heat_constant(params.q, params.p, probes, derivative=True, **kw),
        "data_value": measure_heat_constant(params.crit, params.p, probes, **kw),
        "data_grad": measure_heat_constant(params.crit, params.p, probes, derivative=True, **kw),
    }


def heat_zp_constant(params: SolverParams, probes: list[SpectralField]) -> float:
    """sup over probes of ||e^{. Delta} g||_Z / |g|_crit on the solver grid."""
    best = 0.0
    for g in probes:
        base = lp_norm(to_physical(g), params.crit, g.grid)
        best = max(best, zp_norm(heat_trajectory(g, params.t_grid), params) / base)
    return best


def measure_amplification(grid: GridSpec, model: NoiseModel, t_grid, cap: float = DEFAULT_CAP) -> float:
    """exp(c_max K_max^2): the largest gain of the rescaling's amplifying factor on the grid."""
    c_max = 0.5 * model.energy(np.asarray(t_grid))
    amp = c_max * grid.k_max_retained**2
    if amp > cap:
        raise AmplificationCapError(f"noise budget needs log-amplification {amp:.4g} above cap {cap:.4g}")
    return math.exp(amp)


@dataclass
class SmallnessReport:
    d: int
    c_heat: float
    amplification: float
    theta_factor: float
    term_count: int
    beta_values: tuple[float, float]
    composite: float
    eta_horizon: float
    criterion: float
    rho_max: float
    u0_norm: float
    norm_exponent: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.u0_norm / self.rho_max if self.rho_max > 0 else math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out["beta_values"] = list(self.beta_values)
        out["margin"] = self.margin
        return out


def theta_factor(model: NoiseModel) -> float:
    if model.N == 0:
        return 1.0
    return max([1.0] + [math.inf if th == 0 else 4.0 / th**2 for th in model.theta])


def smallness_betas(params: SolverParams) -> tuple[float, float]:
    p = params.p
    if params.d == 2:
        x = 2 / p - 1.5 + params.gamma
        return beta_function(x, 1.5 - 1 / p), beta_function(x, 1 - 1 / p)
    x = 3 / p - 1.5
    return beta_function(x, 1.5 - 1.5 / p), beta_function(x, 1 - 1.5 / p)


def smallness_report(
    params: SolverParams,
    model: NoiseModel,
    eta_horizon: float,
    U0: SpectralField,
    *,
    c_heat: float | None = None,
    amplification: float | None = None,
    probes: list[SpectralField] | None = None,
) -> SmallnessReport:
    """Measured-constant version of the smallness test eta * |U0|_crit <= 1/(4 c C).

    composite C = c * B^2 * theta_factor * terms * max(beta values), where
    theta_factor = max{1, 4/theta_i^2} in 2-D and 1 in 3-D, terms = 1 (2-D)
    or 2 (3-D, transport and stretching).
    """
    grid = U0.grid
    if c_heat is None:
        consts = heat_constants(params, probes or default_probes(grid))
        c_heat = max(hc.value for hc in consts.values())
    if amplification is None:
        amplification = measure_amplification(grid, model, params.t_grid, params.cap)
    tf = theta_factor(model) if params.d == 2 else 1.0
    terms = 1 if params.d == 2 else 2
    betas = smallness_betas(params)
    composite = c_heat * amplification**2 * tf * terms * max(betas)
    criterion = 1.0 / (4.0 * c_heat * composite)
    rho_max = criterion / eta_horizon
    u0 = lp_norm(to_physical(U0), params.crit, grid)
    return SmallnessReport(
        d=params.d,
        c_heat=c_heat,
        amplification=amplification,
        theta_factor=tf,
        term_count=terms,
        beta_values=betas,
        composite=composite,
        eta_horizon=eta_horizon,
        criterion=criterion,
        rho_max=rho_max,
        u0_norm=u0,
        norm_exponent=params.crit,
        passed=bool(eta_horizon * u0 <= criterion),
    )


def heat_gaussian_lp_norm(t, p: float, d: int, width: float = 1.0, amplitude: float = 1.0) -> np.ndarray:
    """Closed form of |e^{t Delta} A exp(-|x|^2 / (2 w^2))|_p on R^d.

    The heat flow keeps the Gaussian shape with s^2 = w^2 + 2t and amplitude
    A (w^2 / s^2)^{d/2}; the L^p norm of a Gaussian is its peak times (2 pi s^2 / p)^{d/(2p)}.
    """
    s2 = width**2 + 2.0 * np.asarray(t, dtype=np.float64)
    return amplitude * (width**2 / s2) ** (d / 2) * (2 * np.pi * s2 / p) ** (d / (2 * p))


def decay_exponent_fit(t, values) -> tuple[float, float]:
    """Least-squares slope of log(value) against log(t) on the second half of the series.

    Returns (slope, rms residual of the fit).
    """
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.size < 8 or t.size != v.size:
        raise ValueError("need at least 8 (t, value) pairs")
    if np.any(v <= 0) or np.any(t <= 0):
        raise ValueError("times and values must be positive")
    lt, lv = np.log(t[t.size // 2 :]), np.log(v[t.size // 2 :])
    A = np.stack([lt, np.ones_like(lt)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = lv - (slope * lt + icpt)
    return float(slope), float(np.sqrt(np.mean(resid**2)))


def lipschitz_probe(
    U0: SpectralField,
    U0bar: SpectralField,
    params: SolverParams,
    gammas: GammaPath,
    rho_max: float | None = None,
) -> float:
    """||y(U0) - y(U0bar)||_Z / |U0 - U0bar|_crit."""
    diff = lp_norm(to_physical(U0 - U0bar, check=False), params.crit, U0.grid)
    if diff == 0:
        raise ValueError("degenerate Lipschitz probe: identical initial data")
    if rho_max is not None:
        for f in (U0, U0bar):
            nrm = lp_norm(to_physical(f), params.crit, f.grid)
            if nrm > rho_max:
                raise ValueError(f"initial datum fails smallness: {nrm:.6g} > rho_max {rho_max:.6g}")
    y, rep = picard_solve(U0, params, gammas)
    ybar, rep_bar = picard_solve(U0bar, params, gammas)
    if not (rep.converged and rep_bar.converged):
        raise RuntimeError("Picard iteration did not converge for the Lipschitz probe")
    return zp_norm(y - ybar, params) / diff


def gamma_sde_consistency(
    K: float,
    model: NoiseModel,
    dts,
    n_paths: int,
    T: float = 1.0,
    seed: int = 0,
) -> list[dict]:
    """Euler-Maruyama for dg = g sum_i (i sigma_i K + theta_i) dbeta_i on one Fourier mode.

    The reference is the closed-form multiplier exp(m + i a K + c K^2) on the
    finest path.  Returns one row per dt: strong error E|g_EM(T) - g(T)| with
    its standard error, and the sample mean of g_EM(T) (exact mean: 1).
    """
    dts = [float(v) for v in dts]
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dt list must be strictly decreasing")
    if n_paths < 100:
        raise ValueError("need at least 100 paths")
    fine = dts[-1]
    nfine = int(round(T / fine))
    strides = [int(round(dt / fine)) for dt in dts]
    if any(abs(s * fine - dt) > 1e-12 * dt for s, dt in zip(strides, dts)) or abs(nfine * fine - T) > 1e-12:
        raise ValueError("every dt must be an integer multiple of the finest dt dividing T")
    t = np.linspace(0.0, T, nfine + 1)
    sig = model.sigma_table(t)  # (N, nt+1)
    theta = np.asarray(model.theta)[:, None]
    err = np.zeros((len(dts), n_paths))
    g_em = np.zeros((len(dts), n_paths), dtype=np.complex128)
    for s in range(n_paths):
        ens = sample_brownian(seed + s, t, model.N)
        acc = ens.accumulate(model)
        a = float(np.sum(acc.ito[:, -1] - theta[:, 0] * acc.drift[:, -1]))
        c = 0.5 * float(np.sum(acc.energy[:, -1]))
        m = float(np.sum(theta[:, 0] * ens.beta[:, -1] - 0.5 * theta[:, 0] ** 2 * T))
        exact = np.exp(m + 1j * a * K + c * K**2)
        for j, stride in enumerate(strides):
            b = ens.beta[:, ::stride]
            coef = 1j * sig[:, ::stride][:, :-1] * K + theta
            factors = 1.0 + np.sum(coef * np.diff(b, axis=1), axis=0)
            g = np.prod(factors)
            g_em[j, s] = g
            err[j, s] = abs(g - exact)
    rows = []
    for j, dt in enumerate(dts):
        rows.append(
            {
                "dt": dt,
                "strong_error": float(err[j].mean()),
                "strong_error_se": float(err[j].std(ddof=1) / math.sqrt(n_paths)),
                "mean_real": float(g_em[j].real.mean()),
                "mean_imag": float(g_em[j].imag.mean()),
                "mean_se": float(np.sqrt(np.sum(np.abs(g_em[j] - g_em[j].mean()) ** 2) / (n_paths - 1) / n_paths)),
            }
        )
    return rows


def strong_order(rows: list[dict]) -> float:
    dt = np.array([r["dt"] for r in rows])
    e = np.array([r["strong_error"] for r in rows])
    if np.any(e <= 0):
        return math.nan
    return float(np.polyfit(np.log(dt), np.log(e), 1)[0])


def measure_riesz_constant(probes: list[SpectralField], p: float) -> float:
    """max |K f|_r / |f|_p with r = d p / (d - p) (r = 2p/(2-p) in 2-D)."""
    d = probes[0].grid.d
    r = d * p / (d - p)
    best = 0.0
    for f in probes:
        base = lp_norm(to_physical(f), p, f.grid)
        if base > 0:
            best = max(best, lp_norm(to_physical(biot_savart(f), check=False), r, f.grid) / base)
    return best


def measure_cz_constant(probes: list[SpectralField], p: float) -> float:
    """max |grad K f|_p / |f|_p."""
    best = 0.0
    for f in probes:
        base = lp_norm(to_physical(f), p, f.grid)
        if base > 0:
            best = max(best, lp_norm(_grad_phys(biot_savart(f)), p, f.grid) / base)
    return best


def quadratic_constant(y: Trajectory, gammas: GammaPath, params: SolverParams, eta_horizon: float) -> float:
    """||F(y)||_Z / (eta * ||y||_Z^2), where F is the Duhamel part of G."""
    zero = SpectralField.zeros(y.grid, y.coeffs.shape[1])
    F = picard_step(y, gammas, zero, params)
    return zp_norm(F, params) / (eta_horizon * zp_norm(y, params) ** 2)


def global_bound(
    y: Trajectory,
    U0: SpectralField,
    params: SolverParams,
    report: SmallnessReport,
    c_same: float,
    c_cross: float,
) -> dict:
    """Check sup_t |y(t)|_crit <= C (rho + rho^2) with rho = |U0|_crit.

    C = max(c_same, c_cross * B^2 * theta_factor * eta * Beta * (||y||_Z / rho)^2),
    c_same from alpha = beta = crit, c_cross from alpha = q, beta = crit.
    Also reports late growth: max over t >= T/2 of |y(t)| / running max.
    """
    nrm = weighted_norms(y, params)
    crit = nrm["crit"]
    rho = report.u0_norm
    zy = zp_norm(y, params)
    p, g = params.p, params.gamma
    if params.d == 2:
        bval = beta_function(2 / p - 1.5 + g, 2 - g - (4 - p) / (2 * p))
    else:
        bval = max(smallness_betas(params))
    quad = c_cross * report.amplification**2 * report.theta_factor * report.term_count * report.eta_horizon * bval
    C = max(c_same, quad * (zy / rho) ** 2 if rho > 0 else 0.0)
    running = np.maximum.accumulate(crit)
    late = y.t_grid >= 0.5 * y.t_grid[-1]
    growth = float(np.max(crit[late] / running[late])) if np.any(running[late] > 0) else 0.0
    sup = float(crit.max())
    return {
        "sup_crit_norm": sup,
        "rho": rho,
        "C_meas": C,
        "bound": C * (rho + rho**2),
        "passed": bool(sup <= C * (rho + rho**2)),
        "late_growth": growth,
    }


def rk4_reference(U0: SpectralField, params: SolverParams, gammas: GammaPath, substeps: int = 4) -> Trajectory:
    """Integrating-factor RK4 (Lawson) for dy/dt = Delta y + M(y, t).

    Independent of the Duhamel quadrature; the rescaling between grid times is
    the linear interpolant of (a, c, m).
    """
    grid = U0.grid
    t = np.asarray(gammas.t_grid)
    k2 = grid.k2
    out = np.empty((t.size,) + U0.coeffs.shape, dtype=np.complex128)
    y = U0.coeffs.copy()
    out[0] = y

    def M(tt, yy):
        return _nonlinear_coeffs(grid, yy, gammas.at(tt), params.cap)

    for k in range(t.size - 1):
        h = (t[k + 1] - t[k]) / substeps
        E = np.exp(-h * k2)
        E2 = np.exp(-0.5 * h * k2)
        for sub in range(substeps):
            s = t[k] + sub * h
            k1 = M(s, y)
            k2_ = M(s + h / 2, E2 * (y + 0.5 * h * k1))
            k3 = M(s + h / 2, E2 * y + 0.5 * h * k2_)
            k4 = M(s + h, E * y + h * E2 * k3)
            y = E * y + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2_ + k3) + k4)
        out[k + 1] = y
    return Trajectory(grid, t, out, "rk4")
