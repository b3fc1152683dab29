"""Pseudospectral simulation and verification of the stochastic Navier-Stokes
equations in vorticity form with gradient-type multiplicative noise.

The noise is removed by a random rescaling Gamma(t), a single Fourier
multiplier, and the resulting random PDE is solved in mild form by Picard
iteration on a periodic box.
"""

from .biot_savart import biot_savart, biot_savart_2d, biot_savart_3d, curl, divergence
from .grid import (
    GridSpec,
    SpectralField,
    dealias,
    field_lp_norm,
    lp_norm,
    make_grid,
    spectral_gradient,
    to_physical,
    to_spectral,
)
from .noise import (
    BrownianEnsemble,
    GammaPath,
    NoiseModel,
    SigmaSpec,
    eta_path,
    gamma_state_path,
    sample_brownian,
    stopping_time,
)
from .operators import (
    AmplificationCapError,
    GammaState,
    diagonal_heat,
    diagonal_heat_inverse,
    gamma_apply,
    gamma_inverse_apply,
    heat_apply,
    translate_group,
)
from .solver import (
    ConvergenceReport,
    SolverParams,
    Trajectory,
    nonlinear_term,
    picard_solve,
    picard_solve_stopped,
    picard_step,
    reconstruct,
    zp_norm,
)

__version__ = "0.1.0"
