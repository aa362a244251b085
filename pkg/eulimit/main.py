import functools
import logging
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
from dotenv import find_dotenv, load_dotenv

from eulimit.config import RunConfigFile, config_echo, load_run_config, parse_run_config, resolve_output_dir
from eulimit.errors import ConfigError, DomainError, EulimitError, SchemeFailureError
from eulimit.gas_model import ThetaParam
from eulimit.godunov import SimConfig, invariant_audit, riemann_initial, run, write_snapshot_csv
from eulimit.limit_harness import (
    SweepReport,
    decavitation_experiment,
    dissipation_uniformity_sweep,
    energy_rate_sweep,
    entropy_rate_sweep,
    one_side_vacuum_experiment,
    riemann_limit_sweep,
)
from eulimit.reports import SweepSummary, write_csv_atomic, write_summary_atomic
from eulimit.riemann import NonVacuum, Rarefaction, Shock, Vacuum, classify, sample_primitive, solve

logger = logging.getLogger(__name__)

DISSIPATION_THETAS = [0.4, 0.2, 0.1, 0.05, 0.025]


def load_environment():
    """Read a .env from the working directory or its parents; the real environment wins."""
    load_dotenv(find_dotenv(usecwd=True))


load_environment()


class ConfigFailure(click.ClickException):
    exit_code = 2


class NumericalFailure(click.ClickException):
    exit_code = 1


def handle_errors(func):
    """Map configuration errors to exit 2 and numerical failures to exit 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigError as e:
            raise ConfigFailure(str(e)) from e
        except EulimitError as e:
            logger.debug("numerical failure", exc_info=True)
            raise NumericalFailure(f"{type(e).__name__}: {e}") from e

    return wrapper


def _float_list(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _set(payload: Dict[str, Any], dotted: str, value: Any):
    section, _, key = dotted.rpartition(".")
    target = payload
    if section:
        target = payload.setdefault(section, {})
    target[key] = value


def _has(payload: Dict[str, Any], dotted: str) -> bool:
    section, _, key = dotted.rpartition(".")
    target = payload.get(section) if section else payload
    return isinstance(target, dict) and target.get(key) is not None


def effective_config(
    config_path: Optional[str], overrides: Dict[str, Any], defaults: Optional[Dict[str, Any]] = None
) -> RunConfigFile:
    """Config file (if any) with inline flags on top, validated as one document."""
    payload: Dict[str, Any] = {"spec": 1}
    if config_path:
        payload = load_run_config(config_path).model_dump(mode="json", exclude_unset=True)
    for dotted, value in (defaults or {}).items():
        if not _has(payload, dotted):
            _set(payload, dotted, value)
    for dotted, value in overrides.items():
        if value is not None:
            _set(payload, dotted, value)
    return parse_run_config(payload)


@contextmanager
def config_domain():
    """Domain errors raised while turning config values into model objects are config errors."""
    try:
        yield
    except DomainError as e:
        raise ConfigError(str(e)) from e


def _require(value, flag: str):
    if value is None:
        raise ConfigError(f"missing {flag} (or the matching key in --config)")
    return value


def _theta(config: RunConfigFile) -> float:
    return float(_require(config.theta, "--theta"))


def _emit(summary: SweepSummary, out_dir: Path, name: str) -> Path:
    path = write_summary_atomic(summary, out_dir / f"{name}.json")
    click.echo(f"wrote {path}")
    return path


def _emit_report(report: SweepReport, config: RunConfigFile, out_dir: Path):
    report.config_echo = config_echo(config)
    csv_path, json_path = report.write(out_dir)
    for line in report.trailer:
        click.echo(line)
    for name, ok in report.pass_flags.items():
        click.echo(f"{name}: {'pass' if ok else 'FAIL'}")
    click.echo(f"wrote {csv_path}")
    click.echo(f"wrote {json_path}")


# --------------------------------------------------------------------------
# shared options


def common_options(func):
    func = click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON run config")(func)
    func = click.option("--out", "out", type=str, default=None, help="output directory")(func)
    return func


def riemann_options(func):
    func = click.option("--u-r", "u_r", type=float)(func)
    func = click.option("--rho-r", "rho_r", type=str, help='density or "vacuum"')(func)
    func = click.option("--u-l", "u_l", type=float)(func)
    func = click.option("--rho-l", "rho_l", type=str, help='density or "vacuum"')(func)
    return func


def window_options(func):
    func = click.option("--n", "n_cells", type=int)(func)
    func = click.option("--xmax", "x_max", type=float)(func)
    func = click.option("--xmin", "x_min", type=float)(func)
    func = click.option("--t", "t_end", type=float)(func)
    return func


def sweep_options(func):
    func = click.option("--workers", type=int, default=1, show_default=True)(func)
    func = click.option("--xi-grid", "xi_grid", callback=_float_list, help="comma-separated xi values")(func)
    func = click.option("--w0", type=float)(func)
    func = click.option("--seed", type=int)(func)
    func = click.option("--samples", type=int)(func)
    func = click.option("--thetas", callback=_float_list, help="comma-separated, decreasing")(func)
    return func


def _density(value: Optional[str]):
    if value is None or value == "vacuum":
        return value
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"density must be a number or 'vacuum', got {value!r}")


def _riemann_overrides(rho_l, u_l, rho_r, u_r) -> Dict[str, Any]:
    return {
        "riemann.rho_l": _density(rho_l),
        "riemann.u_l": u_l,
        "riemann.rho_r": _density(rho_r),
        "riemann.u_r": u_r,
    }


def _window_overrides(t_end, x_min, x_max, n_cells) -> Dict[str, Any]:
    return {"sim.t_end": t_end, "grid.x_min": x_min, "grid.x_max": x_max, "grid.n_cells": n_cells}


def _sweep_overrides(thetas, samples, seed, w0, xi_grid) -> Dict[str, Any]:
    return {"sweep.thetas": thetas, "sweep.samples": samples, "sweep.seed": seed, "sweep.w0": w0, "sweep.xi_grid": xi_grid}


def _section(config: RunConfigFile, name: str, flags: str):
    section = getattr(config, name)
    if section is None:
        raise ConfigError(f"missing {flags} (or the '{name}' section in --config)")
    return section


def _riemann_data(config: RunConfigFile, theta: float):
    section = _section(config, "riemann", "--rho-l/--u-l/--rho-r/--u-r")
    with config_domain():
        return section.to_data(theta)


def _grid(config: RunConfigFile):
    section = _section(config, "grid", "--xmin/--xmax/--n")
    with config_domain():
        return section.to_grid()


def _sweep_config(config: RunConfigFile, workers: int):
    section = _section(config, "sweep", "sweep flags")
    with config_domain():
        return section.to_sweep_config(workers)


# --------------------------------------------------------------------------
# commands


@click.group()
@click.option(
    "--log-level",
    envvar="EULIMIT_LOG_LEVEL",
    default="INFO",
    show_default=True,
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
)
def cli(log_level: str):
    """Isothermal-limit toolkit for the 1-D barotropic Euler equations."""
    logging.basicConfig(level=getattr(logging, log_level.upper()), format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@cli.command("riemann-solve")
@click.option("--theta", type=float)
@riemann_options
@common_options
@handle_errors
def riemann_solve_command(theta, rho_l, u_l, rho_r, u_r, config_path, out):
    """Exact Riemann solution: wave pattern and middle state."""
    config = effective_config(config_path, {"theta": theta, **_riemann_overrides(rho_l, u_l, rho_r, u_r)})
    data = _riemann_data(config, _theta(config))
    solution = solve(data)
    waves = []
    for wave in solution.pattern:
        if isinstance(wave, Shock):
            waves.append({"kind": "shock", "family": wave.family, "speed": wave.speed})
        elif isinstance(wave, Rarefaction):
            waves.append({"kind": "rarefaction", "family": wave.family, "head": wave.head, "tail": wave.tail})
        else:
            waves.append({"kind": "vacuum", "left_edge": wave.left_edge, "right_edge": wave.right_edge})
    for wave in waves:
        click.echo(" ".join(f"{k}={v}" for k, v in wave.items()))
    region = classify(data).value if isinstance(data.left, NonVacuum) and isinstance(data.right, NonVacuum) else None
    middle = solution.middle
    extras = {
        "region": region,
        "waves": [{k: (v if not isinstance(v, float) or math.isfinite(v) else str(v)) for k, v in w.items()} for w in waves],
        "middle": "vacuum" if isinstance(middle, Vacuum) else {"log_rho": middle.log_rho, "rho": middle.rho, "u": middle.u},
    }
    out_dir = resolve_output_dir(out, config)
    _emit(SweepSummary(experiment_id="riemann_solve", config=config_echo(config), extras=extras, passed=True), out_dir, "riemann_solve")


@cli.command("riemann-sample")
@click.option("--theta", type=float)
@riemann_options
@window_options
@common_options
@handle_errors
def riemann_sample_command(theta, rho_l, u_l, rho_r, u_r, t_end, x_min, x_max, n_cells, config_path, out):
    """Sample the exact solution at time t on n points of [xmin, xmax]."""
    overrides = {"theta": theta, **_riemann_overrides(rho_l, u_l, rho_r, u_r), **_window_overrides(t_end, x_min, x_max, n_cells)}
    config = effective_config(config_path, overrides)
    data = _riemann_data(config, _theta(config))
    grid = _grid(config)
    t = _section(config, "sim", "--t").t_end
    xi = grid.centers / t
    log_rho, u = sample_primitive(solve(data), xi)
    rho = np.exp(log_rho)
    frame = pd.DataFrame({"xi": xi, "rho": rho, "u": np.where(rho > 0.0, u, np.nan), "m": np.where(rho > 0.0, rho * np.nan_to_num(u), 0.0)})
    path = write_csv_atomic(frame, resolve_output_dir(out, config) / "riemann_sample.csv")
    click.echo(f"wrote {path}")


def _simulate(config: RunConfigFile, keep_levels: bool):
    theta = _theta(config)
    data = _riemann_data(config, theta)
    grid = _grid(config)
    sim = _section(config, "sim", "--t")
    sim_config = SimConfig(ThetaParam(theta), grid, sim.t_end, sim.cfl, snapshot_times=tuple(sim.snapshots))
    initial = riemann_initial(grid, data)
    return sim_config, initial, run(sim_config, initial, keep_levels=keep_levels)


def _initial_budget(theta: float, rho: np.ndarray, m: np.ndarray) -> float:
    positive = rho > 0.0
    if not np.any(positive):
        return 1.0
    r = rho[positive]
    s = np.log(r) if theta == 0.0 else np.expm1(theta * np.log(r)) / theta
    return float(np.max(np.abs(m[positive] / r) + s))


@cli.command("simulate")
@click.option("--theta", type=float)
@riemann_options
@window_options
@click.option("--cfl", type=float)
@click.option("--boundary", type=click.Choice(["outflow", "periodic"]))
@click.option("--snapshot", "snapshots", type=float, multiple=True, help="extra output time (repeatable)")
@common_options
@handle_errors
def simulate_command(theta, rho_l, u_l, rho_r, u_r, t_end, x_min, x_max, n_cells, cfl, boundary, snapshots, config_path, out):
    """Godunov run on Riemann data; one CSV per snapshot."""
    overrides = {
        "theta": theta,
        **_riemann_overrides(rho_l, u_l, rho_r, u_r),
        **_window_overrides(t_end, x_min, x_max, n_cells),
        "sim.cfl": cfl,
        "grid.boundary": boundary,
        "sim.snapshots": list(snapshots) or None,
    }
    config = effective_config(config_path, overrides)
    sim_config, initial, result = _simulate(config, keep_levels=False)
    out_dir = resolve_output_dir(out, config)
    for snapshot in result.snapshots:
        write_snapshot_csv(snapshot, sim_config.grid, sim_config.theta, out_dir)
    mass0, momentum0 = initial.totals(sim_config.grid.dx)
    mass1, momentum1 = result.final.totals(sim_config.grid.dx)
    extras = {
        "steps": len(result.max_speeds),
        "max_speed": max(result.max_speeds, default=0.0),
        "mass_change": mass1 - mass0,
        "momentum_change": momentum1 - momentum0,
        "snapshot_times": [s.time for s in result.snapshots],
    }
    _emit(SweepSummary(experiment_id="simulate", config=config_echo(config), extras=extras, passed=True), out_dir, "simulate")


@cli.command("audit")
@click.option("--theta", type=float)
@riemann_options
@window_options
@click.option("--cfl", type=float)
@click.option("--w0", "w0", type=float, help="budget; defaults to the largest initial |u| + S")
@click.option("--slack", type=float, default=1e-8, show_default=True)
@common_options
@handle_errors
def audit_command(theta, rho_l, u_l, rho_r, u_r, t_end, x_min, x_max, n_cells, cfl, w0, slack, config_path, out):
    """Godunov run followed by the invariant-region audit of every time level."""
    overrides = {
        "theta": theta,
        **_riemann_overrides(rho_l, u_l, rho_r, u_r),
        **_window_overrides(t_end, x_min, x_max, n_cells),
        "sim.cfl": cfl,
    }
    config = effective_config(config_path, overrides)
    sim_config, initial, result = _simulate(config, keep_levels=True)
    th = float(sim_config.theta)
    budget = w0 if w0 is not None else _initial_budget(th, initial.rho, initial.m)
    report = invariant_audit(th, result.levels, budget, slack)
    extras = {
        "w0": budget,
        "density_excess": report.density_excess,
        "momentum_excess": report.momentum_excess,
        "budget_excess": report.budget_excess,
        "worst_time": report.worst_time,
    }
    summary = SweepSummary(
        experiment_id="audit", config=config_echo(config), checks={"invariant_region": report.passed}, extras=extras, passed=report.passed
    )
    _emit(summary, resolve_output_dir(out, config), "audit")
    if not report.passed:
        raise SchemeFailureError(f"invariant audit failed at t={report.worst_time:.6g}: {extras}")


def _sweep_command(name: str, runner, help_text: str):
    @cli.command(name, help=help_text)
    @sweep_options
    @common_options
    @handle_errors
    def command(thetas, samples, seed, w0, xi_grid, workers, config_path, out):
        config = effective_config(config_path, _sweep_overrides(thetas, samples, seed, w0, xi_grid), {"sweep.seed": 0})
        report = runner(_sweep_config(config, workers))
        _emit_report(report, config, resolve_output_dir(out, config))

    return command


sweep_entropy_rate_command = _sweep_command(
    "sweep-entropy-rate", entropy_rate_sweep, "Entropy-gap and f_xi rates over the theta ladder."
)
sweep_energy_rate_command = _sweep_command(
    "sweep-energy-rate", energy_rate_sweep, "Mechanical-energy gap rate over the theta ladder."
)


@cli.command("sweep-riemann-limit")
@riemann_options
@window_options
@sweep_options
@common_options
@handle_errors
def sweep_riemann_limit_command(rho_l, u_l, rho_r, u_r, t_end, x_min, x_max, n_cells, thetas, samples, seed, w0, xi_grid, workers, config_path, out):
    """Windowed L1 distance between theta-solutions and the isothermal solution."""
    overrides = {
        **_riemann_overrides(rho_l, u_l, rho_r, u_r),
        **_window_overrides(t_end, x_min, x_max, n_cells),
        **_sweep_overrides(thetas, samples, seed, w0, xi_grid),
    }
    config = effective_config(config_path, overrides, {"sweep.seed": 0})
    data = _riemann_data(config, 0.0)
    grid = _section(config, "grid", "--xmin/--xmax/--n")
    t = _section(config, "sim", "--t").t_end
    report = riemann_limit_sweep(data, (t, grid.x_min, grid.x_max, grid.n_cells), _sweep_config(config, workers))
    _emit_report(report, config, resolve_output_dir(out, config))


@cli.command("decavitation")
@riemann_options
@sweep_options
@common_options
@handle_errors
def decavitation_command(rho_l, u_l, rho_r, u_r, thetas, samples, seed, w0, xi_grid, workers, config_path, out):
    """Decavitation threshold theta* and middle densities around it."""
    overrides = {**_riemann_overrides(rho_l, u_l, rho_r, u_r), **_sweep_overrides(thetas, samples, seed, w0, xi_grid)}
    config = effective_config(config_path, overrides, {"sweep.seed": 0})
    riemann = _section(config, "riemann", "--rho-l/--u-l/--rho-r/--u-r")
    if riemann.rho_l == "vacuum" or riemann.rho_r == "vacuum":
        raise ConfigError("decavitation needs positive densities on both sides")
    report = decavitation_experiment(riemann.rho_l, riemann.u_l, riemann.rho_r, riemann.u_r, _sweep_config(config, workers))
    _emit_report(report, config, resolve_output_dir(out, config))


@cli.command("one-side-vacuum")
@click.option("--rho-r", "rho_r", type=str)
@click.option("--u-r", "u_r", type=float)
@window_options
@sweep_options
@common_options
@handle_errors
def one_side_vacuum_command(rho_r, u_r, t_end, x_min, x_max, n_cells, thetas, samples, seed, w0, xi_grid, workers, config_path, out):
    """Vacuum left of (rho_R, u_R): fan edges and windowed distances as theta -> 0."""
    overrides = {
        **_riemann_overrides(None, None, rho_r, u_r),
        **_window_overrides(t_end, x_min, x_max, n_cells),
        **_sweep_overrides(thetas, samples, seed, w0, xi_grid),
    }
    defaults = {
        "riemann.rho_l": "vacuum", "riemann.u_l": 0.0, "sweep.seed": 0,
        "sim.t_end": 1.0, "grid.x_min": -3.0, "grid.x_max": 3.0, "grid.n_cells": 400,
    }
    config = effective_config(config_path, overrides, defaults)
    riemann = _section(config, "riemann", "--rho-r/--u-r")
    if riemann.rho_r == "vacuum":
        raise ConfigError("one-side-vacuum needs a positive rho_R")
    grid = config.grid
    window = (config.sim.t_end, grid.x_min, grid.x_max, grid.n_cells)
    report = one_side_vacuum_experiment(riemann.rho_r, riemann.u_r, _sweep_config(config, workers), window)
    _emit_report(report, config, resolve_output_dir(out, config))


def _compact_set(ctx, param, value: Optional[str]):
    values = _float_list(ctx, param, value)
    if values is not None and len(values) != 4:
        raise click.BadParameter("expected t0,t1,x0,x1")
    return values


@cli.command("dissipation-sweep")
@riemann_options
@window_options
@click.option("--cfl", type=float)
@click.option("--k", "compact", callback=_compact_set, help="t0,t1,x0,x1 of the compact set K")
@sweep_options
@common_options
@handle_errors
def dissipation_sweep_command(
    rho_l, u_l, rho_r, u_r, t_end, x_min, x_max, n_cells, cfl, compact, thetas, samples, seed, w0, xi_grid, workers, config_path, out
):
    """Mechanical-energy dissipation over K for each theta on a fixed grid."""
    overrides = {
        **_riemann_overrides(rho_l, u_l, rho_r, u_r),
        **_window_overrides(t_end, x_min, x_max, n_cells),
        **_sweep_overrides(thetas, samples, seed, w0, xi_grid),
        "sim.cfl": cfl,
    }
    config = effective_config(config_path, overrides, {"sweep.thetas": DISSIPATION_THETAS, "sweep.seed": 0})
    data = _riemann_data(config, 0.0)
    grid = _grid(config)
    sim = _section(config, "sim", "--t")
    if compact is None:
        compact = [0.25 * sim.t_end, 0.75 * sim.t_end, 0.5 * grid.x_min, 0.5 * grid.x_max]
    compact_set = ((compact[0], compact[1]), (compact[2], compact[3]))
    report = dissipation_uniformity_sweep(data, grid, compact_set, _sweep_config(config, workers), sim.t_end, sim.cfl)
    _emit_report(report, config, resolve_output_dir(out, config))


def parse_and_dispatch(argv: Sequence[str]) -> int:
    """Run one command; 0 on success, 2 on configuration errors, 1 on numerical failures."""
    try:
        load_environment()
        result = cli.main(args=list(argv), prog_name="eulimit", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return result if isinstance(result, int) else 0


def main():
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
