"""Command-line driver.

    nsvort simulate   --config CFG [--out DIR] [--seed S] [--ensemble K] [--workers W]
    nsvort verify     --suite {operators,bridge,solver,sde} --config CFG [--out DIR]
    nsvort smallness  --config CFG [--out DIR]
    nsvort decay      --config CFG [--out DIR]

Exit codes:
    0  success
    1  a verify suite had a failing property
    2  invalid configuration
    3  Picard iteration diverged or did not converge
    4  amplification cap exceeded by the rescaling
    5  boundary-mass guard tripped (field too close to the box edge)
    6  smallness criterion failed
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, build_initial_condition, load_config
from .grid import boundary_mass, field_lp_norm, lp_norm, make_grid, to_physical
from .io import write_json, write_norms_csv, write_snapshot
from .noise import eta_path, eta_tail_factor, gamma_state_path, sample_brownian
from .operators import AmplificationCapError
from .solver import heat_trajectory, picard_solve, picard_solve_stopped, reconstruct, weighted_norms, zp_norm
from .suites import SUITES, run_suite
from .verification import (
    decay_exponent_fit,
    default_probes,
    heat_gaussian_lp_norm,
    heat_zp_constant,
    measure_amplification,
    measure_cz_constant,
    measure_riesz_constant,
    smallness_report,
)

log = logging.getLogger("nsvort")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_CAP = 4
EXIT_BOUNDARY = 5
EXIT_NOT_SMALL = 6


class BoundaryMassError(ValueError):
    pass


def _guard_boundary(samples: np.ndarray, cfg: RunConfig, what: str) -> None:
    grid = cfg.grid_spec()
    mass = boundary_mass(samples, grid)
    if mass > cfg.tolerances.boundary_mass:
        raise BoundaryMassError(
            f"{what} reaches {mass:.3e} of its peak near the box edge "
            f"(limit {cfg.tolerances.boundary_mass:g}); enlarge L or narrow the field"
        )


def _setup(cfg: RunConfig):
    grid = cfg.grid_spec()
    params = cfg.solver_params()
    model = cfg.noise_model()
    t = params.t_grid
    model.check_budget(t)
    # fails early with exit 4 instead of midway through the solve
    amp = measure_amplification(grid, model, t, params.cap)
    ens = sample_brownian(cfg.seed, t, model.N)
    U0 = build_initial_condition(cfg, grid)
    _guard_boundary(to_physical(U0), cfg, "initial vorticity")
    return grid, params, model, ens, U0, amp


def simulate(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, params, model, ens, U0, amp = _setup(cfg)
    gammas = gamma_state_path(model, ens)
    eta, eta_h = eta_path(model, ens)
    tau = math.inf
    if cfg.stopping_r is None:
        y, report = picard_solve(U0, params, gammas)
    else:
        small = smallness_report(params, model, eta_h, U0, amplification=amp)
        y, report, tau = picard_solve_stopped(U0, cfg.stopping_r, params, model, ens, small.criterion, eta=eta)
    conv = report.to_dict()
    conv.update(seed=cfg.seed, tau_r=tau, eta_horizon=eta_h, eta_tail_factor=eta_tail_factor(model, params.T))
    write_json(out / "convergence.json", conv)
    if not report.converged:
        log.error("Picard iteration failed: %s", report.message)
        return EXIT_DIVERGED
    nrm = weighted_norms(y, params)
    write_norms_csv(
        out / "norms.csv",
        {
            "t": y.t_grid,
            "lp": nrm["lp"],
            "grad_lp": nrm["grad_lp"],
            "weighted_lp": nrm["weighted_lp"],
            "weighted_grad_lp": nrm["weighted_grad_lp"],
            "l_crit": nrm["crit"],
            "eta_t": eta,
            "a": gammas.a,
            "c": gammas.c,
            "m": gammas.m,
        },
    )
    U, X = reconstruct(y, gammas, params.cap)
    snaps = out / "snapshots"
    last = len(y) - 1
    for k in range(len(y)):
        if k % cfg.snapshot_every == 0 or k == last:
            write_snapshot(snaps, f"vorticity_{k:05d}", U[k], y.t_grid[k], "vorticity")
            write_snapshot(snaps, f"velocity_{k:05d}", X[k], y.t_grid[k], "velocity")
    log.info("converged in %d iterations, residual %.3e -> %s", report.iterations, report.residual, out)
    return EXIT_OK


def _simulate_seed(cfg: RunConfig) -> int:
    try:
        return simulate(cfg)
    except AmplificationCapError as exc:
        log.error("%s", exc)
        return EXIT_CAP
    except BoundaryMassError as exc:
        log.error("%s", exc)
        return EXIT_BOUNDARY


def run_simulate(cfg: RunConfig, ensemble: int = 1, workers: int = 1) -> int:
    if ensemble <= 1:
        return _simulate_seed(cfg)
    base = Path(cfg.output_dir)
    cfgs = [cfg.with_seed(cfg.seed + i).with_output(str(base / f"seed_{cfg.seed + i}")) for i in range(ensemble)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(_simulate_seed, cfgs))
    else:
        codes = [_simulate_seed(c) for c in cfgs]
    # merged in seed order, independent of completion order
    write_json(base / "ensemble.json", {"seeds": [c.seed for c in cfgs], "exit_codes": codes})
    return max(codes)


def run_verify(suite: str, cfg: RunConfig, n_paths: int = 1000) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    kw = {"n_paths": n_paths} if suite == "sde" else {}
    checks = run_suite(suite, cfg, **kw)
    for c in checks:
        log.info("%s %s: %.6g (%s)", "PASS" if c.passed else "FAIL", c.name, c.measured, c.limit)
    ok = all(c.passed for c in checks)
    write_json(out / "verify_report.json", {"suite": suite, "passed": ok, "properties": [c.to_dict() for c in checks]})
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def run_smallness(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, params, model, ens, U0, amp = _setup(cfg)
    _, eta_h = eta_path(model, ens)
    rep = smallness_report(params, model, eta_h, U0, amplification=amp)
    payload = rep.to_dict()
    payload["eta_tail_factor"] = eta_tail_factor(model, params.T)
    write_json(out / "smallness.json", payload)
    print(f"rho_max = {rep.rho_max:.6g}  |U0|_{rep.norm_exponent:.4g} = {rep.u0_norm:.6g}  passed = {rep.passed}")
    return EXIT_OK if rep.passed else EXIT_NOT_SMALL


def _constants(cfg: RunConfig, n: int) -> dict:
    grid = make_grid(cfg.dimension, n, cfg.grid.L)
    params = cfg.solver_params()
    probes = default_probes(grid)
    U0 = build_initial_condition(cfg, grid)
    # the configured initial condition at unit amplitude probes the Riesz and CZ bounds
    ic = cfg.initial_condition.model_copy(update={"amplitude": 1.0, "scale": 1.0})
    vort = [build_initial_condition(cfg.model_copy(update={"initial_condition": ic}), grid)]
    return {
        "n": n,
        "heat_zp_constant": heat_zp_constant(params, probes),
        "heat_zp_ratio_u0": _heat_ratio(U0, params),
        "riesz_constant": measure_riesz_constant(vort, params.p),
        "cz_constant": measure_cz_constant(vort, params.p),
    }


def _heat_ratio(U0, params) -> float:
    base = lp_norm(to_physical(U0), params.crit, U0.grid)
    return zp_norm(heat_trajectory(U0, params.t_grid), params) / base if base > 0 else 0.0


def run_decay(cfg: RunConfig) -> int:
    """Heat-flow decay of the initial condition and grid stability of the measured constants."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid_spec()
    params = cfg.solver_params()
    U0 = build_initial_condition(cfg, grid)
    _guard_boundary(to_physical(U0), cfg, "initial vorticity")
    # long enough for the power-law tail, short enough that the heat flow stays inside the box
    t = np.geomspace(0.1 * cfg.grid.L / 20.0, 0.5 * cfg.grid.L, 40)
    series = [field_lp_norm(heat_trajectory(U0, np.array([0.0, tk]))[1], params.p, check=False) for tk in t]
    slope, rms = decay_exponent_fit(t, series)
    coarse, fine = _constants(cfg, grid.n), _constants(cfg, 2 * grid.n)
    drift = {k: abs(fine[k] - coarse[k]) / coarse[k] for k in coarse if k != "n" and coarse[k] > 0}
    d, p = grid.d, params.p
    bump = -(d / 2) * (1 - 1 / p)
    mean_zero = bool(np.all(np.abs(U0.mean()) <= 1e-14 * max(1.0, float(np.max(np.abs(U0.coeffs))) * grid.n**d)))
    # closed-form heat flow of a unit-width Gaussian on the whole space has no box, so
    # its tail can be followed far enough for the power law to emerge
    t_long = np.geomspace(1.0, 1e4, 40)
    gauss_slope, _ = decay_exponent_fit(t_long, heat_gaussian_lp_norm(t_long, p, d))
    payload = {
        "times": t,
        "lp_norms": series,
        "fitted_slope": slope,
        "fit_rms": rms,
        "mean_zero": mean_zero,
        # a mean-zero field with a nonzero first moment decays half a power faster
        "theory_slope": bump - 0.5 if mean_zero else bump,
        "gaussian_slope": bump,
        "closed_form_gaussian_fit": gauss_slope,
        "constants": {"coarse": coarse, "fine": fine, "relative_change": drift},
    }
    write_json(out / "decay.json", payload)
    print(f"fitted slope {slope:.4f}, large-time theory {payload['theory_slope']:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsvort", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="noise seed (overrides seed)")

    sim = sub.add_parser("simulate", help="solve the rescaled equation and write norms and snapshots")
    common(sim)
    sim.add_argument("--ensemble", type=int, default=1, help="run this many consecutive seeds")
    sim.add_argument("--workers", type=int, default=1)
    ver = sub.add_parser("verify", help="run an invariant suite")
    common(ver)
    ver.add_argument("--suite", required=True, choices=sorted(SUITES))
    ver.add_argument("--paths", type=int, default=1000, help="Monte-Carlo paths for the sde suite")
    common(sub.add_parser("smallness", help="evaluate the smallness criterion"))
    common(sub.add_parser("decay", help="heat decay fit and grid stability of constants"))
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg = cfg.with_output(args.out)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"seed must be >= 0, got {args.seed}")
            cfg = cfg.with_seed(args.seed)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "simulate":
            return run_simulate(cfg, args.ensemble, args.workers)
        if args.command == "verify":
            return run_verify(args.suite, cfg, args.paths)
        if args.command == "smallness":
            return run_smallness(cfg)
        return run_decay(cfg)
    except AmplificationCapError as exc:
        print(f"amplification cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except BoundaryMassError as exc:
        print(f"boundary-mass guard: {exc}", file=sys.stderr)
        return EXIT_BOUNDARY
    except ValueError as exc:
        # budget and precondition failures discovered after loading
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
