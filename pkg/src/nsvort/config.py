"""Run configuration: one JSON document, unknown keys rejected.

Every precondition of the solver, the noise model and the grid is checked at
load time so that a bad run fails before any work is done.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .fields import curl_gaussian, gaussian, gaussian_dipole, shielded_dipole
from .grid import GridSpec, SpectralField, make_grid, to_spectral
from .io import load_field
from .noise import NoiseModel, SigmaSpec
from .operators import DEFAULT_CAP
from .solver import SolverParams

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "build_initial_condition"]


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Strict):
    n: int = 64
    L: float = 20.0


class TimeConfig(_Strict):
    T: float = 1.0
    nt: int = 64


class ExponentConfig(_Strict):
    p: float = 1.6
    gamma: float | None = 0.3


class SigmaConfig(_Strict):
    kind: Literal["constant", "exponential"] = "constant"
    sigma0: float = 0.0
    # None means sigma stays on for the whole horizon
    t0: float | None = None
    rate: float = 1.0


class NoiseConfig(_Strict):
    N: int = 1
    theta: list[float] = Field(default_factory=lambda: [1.0])
    sigma: SigmaConfig = Field(default_factory=SigmaConfig)
    sigma_budget: float | None = None


class InitialCondition(_Strict):
    kind: Literal["gaussian_dipole", "gaussian", "shielded_dipole", "zero", "file"] = "gaussian_dipole"
    amplitude: float = 2e-4
    width: float = 1.0
    separation: float = 2.0
    scale: float = 1.0
    path: str | None = None


class Tolerances(_Strict):
    picard: float = 1e-8
    max_iters: int = 50
    boundary_mass: float = 1e-12


class RunConfig(_Strict):
    dimension: Literal[2, 3] = 2
    grid: GridConfig = Field(default_factory=GridConfig)
    time: TimeConfig = Field(default_factory=TimeConfig)
    exponents: ExponentConfig = Field(default_factory=ExponentConfig)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    seed: int = Field(default=7, ge=0, lt=2**64)
    initial_condition: InitialCondition = Field(default_factory=InitialCondition)
    amplification_cap: float = DEFAULT_CAP
    tolerances: Tolerances = Field(default_factory=Tolerances)
    output_dir: str = "out"
    snapshot_every: int = 16
    # stop the adapted solution when eta_t first reaches this threshold
    stopping_r: float | None = None

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        # the builders raise ValueError with the violated inequality named
        self.grid_spec()
        self.solver_params()
        self.noise_model()
        if len(self.noise.theta) != self.noise.N:
            raise ValueError(f"noise.theta has {len(self.noise.theta)} entries but N = {self.noise.N}")
        if any(not th > 0 for th in self.noise.theta):
            raise ValueError(f"every theta_i must be > 0, got {self.noise.theta}")
        if not self.amplification_cap > 0:
            raise ValueError("amplification_cap must be > 0")
        if self.stopping_r is not None and not self.stopping_r > 0:
            raise ValueError(f"stopping_r must be > 0, got {self.stopping_r}")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")
        ic = self.initial_condition
        if ic.kind == "file" and not ic.path:
            raise ValueError("initial_condition.kind = 'file' needs initial_condition.path")
        if ic.kind == "shielded_dipole" and self.dimension != 2:
            raise ValueError("shielded_dipole is only available in 2-D")
        if not ic.width > 0:
            raise ValueError("initial_condition.width must be > 0")
        return self

    def grid_spec(self) -> GridSpec:
        return make_grid(self.dimension, self.grid.n, self.grid.L)

    def solver_params(self) -> SolverParams:
        gamma = self.exponents.gamma if self.dimension == 2 else None
        return SolverParams(
            d=self.dimension,
            p=self.exponents.p,
            gamma=gamma,
            T=self.time.T,
            nt=self.time.nt,
            tol=self.tolerances.picard,
            max_iters=self.tolerances.max_iters,
            cap=self.amplification_cap,
        )

    def noise_model(self) -> NoiseModel:
        s = self.noise.sigma
        spec = SigmaSpec(s.kind, s.sigma0, math.inf if s.t0 is None else s.t0, s.rate)
        budget = math.inf if self.noise.sigma_budget is None else self.noise.sigma_budget
        return NoiseModel(tuple(self.noise.theta), (spec,) * len(self.noise.theta), budget)

    def with_seed(self, seed: int) -> "RunConfig":
        return self.model_copy(update={"seed": seed})

    def with_output(self, out: str) -> "RunConfig":
        return self.model_copy(update={"output_dir": out})


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(v) for v in err["loc"]) or "config"
        msg = err["msg"].removeprefix("Value error, ")
        parts.append(f"{loc}: {msg}")
    return "; ".join(parts)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
        data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(data)


def build_initial_condition(cfg: RunConfig, grid: GridSpec | None = None) -> SpectralField:
    grid = grid or cfg.grid_spec()
    ic = cfg.initial_condition
    if ic.kind == "gaussian_dipole":
        f = gaussian_dipole(grid, ic.amplitude, ic.width, ic.separation)
    elif ic.kind == "gaussian":
        # a 3-D vorticity must be divergence free, so use the curl of the bump there
        f = gaussian(grid, ic.amplitude, ic.width) if grid.d == 2 else curl_gaussian(grid, ic.amplitude, ic.width)
    elif ic.kind == "shielded_dipole":
        f = shielded_dipole(grid, ic.amplitude, ic.width)
    elif ic.kind == "zero":
        f = SpectralField.zeros(grid, 1 if grid.d == 2 else 3)
    else:
        f = to_spectral(load_field(Path(ic.path), grid), grid)
    return f * ic.scale if ic.scale != 1.0 else f
