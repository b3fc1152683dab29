import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsvort.noise import (
    BrownianEnsemble,
    GammaPath,
    NoiseModel,
    SigmaSpec,
    eta_path,
    eta_tail_factor,
    gamma_state_path,
    sample_brownian,
    stopping_time,
)

T_GRID = np.linspace(0.0, 1.0, 65)


def test_sample_is_deterministic():
    a = sample_brownian(7, T_GRID, 2)
    b = sample_brownian(7, T_GRID, 2)
    assert np.array_equal(a.beta, b.beta)
    assert not np.array_equal(a.beta, sample_brownian(8, T_GRID, 2).beta)


def test_channels_are_independent_of_count():
    one = sample_brownian(3, T_GRID, 1)
    three = sample_brownian(3, T_GRID, 3)
    assert np.array_equal(one.beta[0], three.beta[0])


def test_paths_start_at_zero():
    assert np.all(sample_brownian(1, T_GRID, 4).beta[:, 0] == 0)


def test_brownian_variance_at_one():
    finals = np.array([sample_brownian(s, [0.0, 0.5, 1.0], 1).beta[0, -1] for s in range(10_000)])
    se = math.sqrt(2.0 / 9_999)
    assert abs(np.mean(finals**2) - 1.0) < 4 * se
    assert abs(np.mean(finals)) < 4 / math.sqrt(10_000)


@pytest.mark.parametrize("grid", [[0.5, 1.0], [0.0], [0.0, 0.5, 0.5], [[0.0, 1.0]]])
def test_bad_time_grid(grid):
    with pytest.raises(ValueError):
        sample_brownian(0, grid, 1)


def test_from_paths_requires_zero_start():
    with pytest.raises(ValueError):
        BrownianEnsemble.from_paths([0.0, 1.0], [[0.1, 0.2]])


def test_sigma_specs():
    s = SigmaSpec("constant", 2.0, t0=0.5)
    assert list(s(np.array([0.0, 0.5, 0.6]))) == [2.0, 2.0, 0.0]
    e = SigmaSpec("exponential", 1.0, rate=2.0)
    assert e(np.array([1.0]))[0] == pytest.approx(math.exp(-2.0))
    with pytest.raises(ValueError):
        SigmaSpec("cubic")
    with pytest.raises(ValueError):
        SigmaSpec("exponential", 1.0, rate=0.0)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel((1.0, 2.0), (SigmaSpec(),))
    with pytest.raises(ValueError):
        NoiseModel((-1.0,), (SigmaSpec(),))
    assert NoiseModel.constant([0.0]).N == 1  # theta = 0 is allowed by the library


def test_energy_and_budget():
    m = NoiseModel((1.0,), (SigmaSpec("constant", 0.5),), sigma_budget=0.2)
    assert m.energy(T_GRID) == pytest.approx(0.25)
    with pytest.raises(ValueError, match="budget"):
        m.check_budget(T_GRID)


def test_gamma_path_zero_noise_closed_form():
    # sigma = 0: a = c = 0, m = theta beta - theta^2 t / 2
    ens = sample_brownian(5, T_GRID, 1)
    path = gamma_state_path(NoiseModel.constant([1.5]), ens)
    assert np.all(path.a == 0) and np.all(path.c == 0)
    assert np.allclose(path.m, 1.5 * ens.beta[0] - 1.125 * T_GRID, atol=1e-15)


def test_gamma_path_constant_sigma_closed_form():
    # constant sigma: int sigma dbeta = sigma beta(t), int sigma ds = sigma t
    ens = sample_brownian(5, T_GRID, 1)
    path = gamma_state_path(NoiseModel.constant([2.0], 0.3), ens)
    assert np.allclose(path.a, 0.3 * ens.beta[0] - 2.0 * 0.3 * T_GRID, atol=1e-14)
    assert np.allclose(path.c, 0.5 * 0.09 * T_GRID, atol=1e-15)


def test_gamma_path_indexing_and_interp():
    ens = BrownianEnsemble.from_paths([0.0, 1.0], [[0.0, 1.0]])
    path = gamma_state_path(NoiseModel.constant([1.0], 1.0), ens)
    assert path[1].c == pytest.approx(0.5)
    assert path.at(0.5).c == pytest.approx(0.25)
    assert len(path.truncate(0)) == 1
    ident = GammaPath.identity(T_GRID)
    assert ident[10].m == 0.0


def test_eta_is_nondecreasing_and_starts_at_one():
    eta, top = eta_path(NoiseModel.constant([1.0]), sample_brownian(2, T_GRID, 1))
    assert eta[0] == 1.0
    assert np.all(np.diff(eta) >= 0)
    assert top == eta[-1]


def test_eta_deterministic_path():
    ens = BrownianEnsemble.from_paths([0.0, 1.0, 2.0], [[0.0, 2.0, 0.0]])
    eta, _ = eta_path(NoiseModel.constant([1.0]), ens)
    assert eta == pytest.approx([1.0, math.exp(1.75), math.exp(1.75)])


def test_eta_tail_factor():
    assert eta_tail_factor(NoiseModel.constant([2.0, 1.0]), 4.0) == pytest.approx(math.exp(-1.0))
    assert eta_tail_factor(NoiseModel((), ()), 1.0) == 0.0


def test_stopping_time():
    eta = np.array([1.0, 1.2, 2.0, 3.0])
    t = np.array([0.0, 0.1, 0.2, 0.3])
    assert stopping_time(eta, 2.0, t) == 0.2
    assert stopping_time(eta, 5.0, t) == math.inf
    with pytest.raises(ValueError):
        stopping_time(eta, 0.0, t)


@given(seed=st.integers(0, 2**64 - 1), sigma0=st.floats(0, 2), theta=st.floats(0.1, 3))
def test_gamma_path_invariants(seed, sigma0, theta):
    ens = sample_brownian(seed, T_GRID, 1)
    path = gamma_state_path(NoiseModel.constant([theta], sigma0), ens)
    assert path.a[0] == path.c[0] == path.m[0] == 0.0
    assert np.all(np.diff(path.c) >= 0)
    eta, _ = eta_path(NoiseModel.constant([theta], sigma0), ens)
    assert np.all(eta >= 1.0)


@given(seed=st.integers(0, 2**32), stride=st.sampled_from([2, 4, 8]))
def test_subsample_keeps_values(seed, stride):
    ens = sample_brownian(seed, T_GRID, 2)
    sub = ens.subsample(stride)
    assert np.array_equal(sub.beta, ens.beta[:, ::stride])
    assert sub.t_grid[-1] == 1.0
