import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import beta as scipy_beta

from nsvort.config import RunConfig
from nsvort.fields import gaussian, gaussian_dipole
from nsvort.grid import make_grid
from nsvort.noise import GammaPath, NoiseModel
from nsvort.operators import AmplificationCapError
from nsvort.solver import SolverParams, heat_trajectory, picard_solve
from nsvort.suites import SUITES, run_suite
from nsvort.verification import (
    beta_function,
    decay_exponent_fit,
    default_probes,
    gamma_sde_consistency,
    global_bound,
    heat_gaussian_lp_norm,
    heat_zp_constant,
    lipschitz_probe,
    measure_amplification,
    measure_cz_constant,
    measure_heat_constant,
    measure_riesz_constant,
    quadratic_constant,
    smallness_betas,
    smallness_report,
    strong_order,
    theta_factor,
)

from .oracles import gaussian_lp

P2 = SolverParams(d=2, p=1.6, gamma=0.3, T=1.0, nt=32)


@given(x=st.floats(0.05, 10), y=st.floats(0.05, 10))
def test_beta_function_matches_scipy(x, y):
    assert beta_function(x, y) == pytest.approx(scipy_beta(x, y), rel=1e-12)


def test_beta_function_rejects_nonpositive():
    with pytest.raises(ValueError):
        beta_function(0.0, 1.0)


def test_smallness_betas_finite():
    b2 = smallness_betas(P2)
    b3 = smallness_betas(SolverParams(d=3, p=1.75))
    assert all(math.isfinite(v) and v > 0 for v in b2 + b3)


def test_theta_factor():
    assert theta_factor(NoiseModel.constant([1.0])) == 4.0
    assert theta_factor(NoiseModel.constant([3.0, 4.0])) == 1.0
    assert theta_factor(NoiseModel.constant([0.0])) == math.inf
    assert theta_factor(NoiseModel((), ())) == 1.0


def test_heat_closed_form_at_zero_is_gaussian_norm():
    assert heat_gaussian_lp_norm(np.array([0.0]), 1.6, 2, 2.0, 3.0)[0] == pytest.approx(gaussian_lp(1.6, 2, 3.0, 2.0))


def test_heat_closed_form_matches_grid(grid2):
    t = np.array([0.0, 0.5, 1.0])
    y = heat_trajectory(gaussian(grid2, 1.0, 2.0), t)
    from nsvort.grid import field_lp_norm

    grid_vals = [field_lp_norm(y[k], 3.0) for k in range(3)]
    assert grid_vals == pytest.approx(list(heat_gaussian_lp_norm(t, 3.0, 2, 2.0)), rel=1e-9)


def test_decay_fit_recovers_power_law():
    t = np.geomspace(1, 100, 30)
    slope, rms = decay_exponent_fit(t, 3.0 * t**-0.375)
    assert slope == pytest.approx(-0.375, abs=1e-12)
    assert rms < 1e-12


def test_closed_form_gaussian_decay_slope():
    t = np.geomspace(1.0, 1e4, 40)
    slope, _ = decay_exponent_fit(t, heat_gaussian_lp_norm(t, 1.6, 2))
    assert slope == pytest.approx(-(1 - 1 / 1.6), abs=5e-3)


def test_heat_constant_is_finite_and_stable():
    values = []
    for n in (64, 128):
        g = make_grid(2, n, 20.0)
        hc = measure_heat_constant(P2.q, P2.p, default_probes(g), t_min=P2.T / P2.nt, t_max=P2.T)
        values.append(hc.value)
    assert all(math.isfinite(v) and v > 0 for v in values)
    assert abs(values[1] - values[0]) / values[0] < 0.05


def test_heat_zp_constant_positive(grid2):
    assert 0 < heat_zp_constant(P2, default_probes(grid2)) < 100


def test_riesz_and_cz_constants_are_grid_stable():
    out = []
    for n in (64, 128):
        g = make_grid(2, n, 20.0)
        probe = [gaussian_dipole(g, 1.0, 1.0, 2.0)]
        out.append((measure_riesz_constant(probe, 1.6), measure_cz_constant(probe, 1.6)))
    for a, b in zip(*out):
        assert abs(a - b) / b < 0.02


def test_measure_amplification(grid2):
    t = P2.t_grid
    assert measure_amplification(grid2, NoiseModel.constant([1.0]), t) == 1.0
    model = NoiseModel.constant([1.0], 0.05)
    expect = math.exp(0.5 * 0.0025 * grid2.k_max_retained**2)
    assert measure_amplification(grid2, model, t) == pytest.approx(expect)
    with pytest.raises(AmplificationCapError):
        measure_amplification(grid2, NoiseModel.constant([1.0], 5.0), t)


def test_smallness_report_reference(grid2):
    U0 = gaussian_dipole(grid2, 2e-4, 1.0, 2.0)
    rep = smallness_report(P2, NoiseModel.constant([1.0]), 1.0, U0)
    assert rep.passed and rep.margin < 1
    assert rep.criterion == pytest.approx(1 / (4 * rep.c_heat * rep.composite))
    big = smallness_report(P2, NoiseModel.constant([1.0]), 1.0, U0 * 1e4, c_heat=rep.c_heat)
    assert not big.passed
    d = rep.to_dict()
    assert d["margin"] == rep.margin and isinstance(d["beta_values"], list)


def test_lipschitz_probe_bounded(grid2):
    g = GammaPath.identity(P2.t_grid)
    U0 = gaussian_dipole(grid2, 2e-4, 1.0, 2.0)
    ratio = lipschitz_probe(U0, U0 * 1.01, P2, g)
    base = heat_zp_constant(P2, [U0])
    assert ratio == pytest.approx(base, rel=1e-3)
    with pytest.raises(ValueError):
        lipschitz_probe(U0, U0, P2, g)
    with pytest.raises(ValueError, match="smallness"):
        lipschitz_probe(U0, U0 * 2, P2, g, rho_max=1e-12)


def test_quadratic_constant_stable(grid2):
    g = GammaPath.identity(P2.t_grid)
    vals = []
    for A in (1e-3, 1e-2):
        y, _ = picard_solve(gaussian_dipole(grid2, A, 1.0, 2.0), P2, g)
        vals.append(quadratic_constant(y, g, P2, 1.0))
    assert abs(vals[1] - vals[0]) / vals[0] < 0.2


def test_global_bound_reference(grid2):
    U0 = gaussian_dipole(grid2, 2e-4, 1.0, 2.0)
    model = NoiseModel.constant([1.0])
    g = GammaPath.identity(P2.t_grid)
    y, _ = picard_solve(U0, P2, g)
    rep = smallness_report(P2, model, 1.0, U0)
    res = global_bound(y, U0, P2, rep, c_same=1.0, c_cross=1.0)
    assert res["passed"]
    assert res["late_growth"] <= 1.0


def test_sde_zero_noise_is_exact():
    rows = gamma_sde_consistency(1.0, NoiseModel.constant([1.0], 0.0), [0.1, 0.05], 200, seed=3)
    # with sigma = 0 both the scheme and the reference are real, so only the product rule errs
    assert all(r["mean_imag"] == 0 for r in rows)


def test_sde_strong_order():
    rows = gamma_sde_consistency(1.0, NoiseModel.constant([1.0], 0.5), [0.1, 0.05, 0.025, 0.0125], 400, seed=1)
    order = strong_order(rows)
    assert 0.35 <= order <= 0.65
    for r in rows:
        assert abs(r["mean_real"] - 1.0) <= 4 * r["mean_se"] + 0.05


def test_sde_rejects_bad_grids():
    m = NoiseModel.constant([1.0], 0.5)
    with pytest.raises(ValueError):
        gamma_sde_consistency(1.0, m, [0.05, 0.1], 200)
    with pytest.raises(ValueError):
        gamma_sde_consistency(1.0, m, [0.1, 0.03], 200)
    with pytest.raises(ValueError):
        gamma_sde_consistency(1.0, m, [0.1, 0.05], 10)


def test_strong_order_handles_zero_error():
    assert math.isnan(strong_order([{"dt": 0.1, "strong_error": 0.0}, {"dt": 0.05, "strong_error": 0.0}]))


@pytest.mark.parametrize("name", ["operators", "bridge", "solver", "sde"])
def test_suites_pass_2d(name):
    checks = run_suite(name, RunConfig())
    failed = [c.name for c in checks if not c.passed]
    assert checks and not failed, failed


def test_suite_registry():
    assert set(SUITES) == {"operators", "bridge", "solver", "sde"}
    with pytest.raises((KeyError, ValueError)):
        run_suite("nonexistent", RunConfig())
