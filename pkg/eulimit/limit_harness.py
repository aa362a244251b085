"""
Theta-sweeps for the isothermal limit.

Each experiment runs one independent work item per theta (optionally on a
thread pool), merges the rows in theta order into a pandas table, fits
log-log slopes where a rate is claimed and records one boolean per
acceptance rule. Random states come from per-theta substreams
``default_rng([seed, theta_index])`` so results do not depend on the
number of workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
import pandas as pd
from scipy.stats import linregress

from eulimit.entropy import DEFAULT_QUADRATURE, XI_LIMIT, f_xi_arrays, isothermal_entropy_arrays, theta_entropy_arrays
from eulimit.errors import DomainError, InsufficientDataError, PreconditionError
from eulimit.gas_model import THETA0, ThetaParam, mechanical_energy_arrays
from eulimit.godunov import Grid1D, SimConfig, TimeSpace, dissipation_tv_estimate, grid_floor, riemann_initial, run
from eulimit.quadrature import QuadratureSpec
from eulimit.reports import FitSummary, SweepSummary, write_csv_atomic, write_summary_atomic
from eulimit.riemann import (
    NonVacuum,
    RiemannData,
    RiemannSolution,
    Vacuum,
    approximating_budget,
    approximating_family,
    classify,
    decavitation_threshold,
    middle_state,
    one_side_vacuum_solution,
    sample_arrays,
    sample_primitive,
    side_within_budget,
    solve,
)

logger = logging.getLogger(__name__)

DEFAULT_THETAS = tuple(0.1 * 0.5 ** k for k in range(11))
XI_MARGIN = 0.05
MIN_FIT_POINTS = 4
MONOTONE_BAND = 0.05
VACUUM_SHARE = 0.05
NEAR_VACUUM_SHARE = 0.10
NEAR_VACUUM_RANGE = (1e-6, 1e-3)
MIN_DENSITY = 1e-6
EDGE_OFFSET = 1e-2

Sampler = Callable[[float, float, int, np.random.Generator], Tuple[np.ndarray, np.ndarray]]
Window = Tuple[float, float, float, int]
T = TypeVar("T")
R = TypeVar("R")


# --------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class SweepConfig:
    thetas: Tuple[float, ...] = DEFAULT_THETAS
    sample_count: int = 400
    seed: int = 0
    w0: float = 2.0
    xi_grid: Tuple[float, ...] = (-0.3, -0.1, 0.1, 0.3)
    workers: int = 1
    quad: QuadratureSpec = field(default=DEFAULT_QUADRATURE)
    sampler: Optional[Sampler] = field(default=None, compare=False)

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        if not thetas:
            raise DomainError("a sweep needs at least one theta")
        if any(a <= b for a, b in zip(thetas, thetas[1:])):
            raise DomainError(f"thetas must be strictly decreasing, got {thetas!r}")
        for theta in thetas:
            ThetaParam(theta)
            if theta <= 0.0:
                raise DomainError(f"sweep thetas must be positive, got {theta!r}")
        if self.sample_count < 1:
            raise DomainError(f"sample_count must be positive, got {self.sample_count}")
        if not (math.isfinite(self.w0) and self.w0 > 0.0):
            raise DomainError(f"w0 must be positive, got {self.w0!r}")
        xi_grid = tuple(float(x) for x in self.xi_grid)
        if any(abs(x) >= XI_LIMIT for x in xi_grid):
            raise DomainError(f"xi values must lie in (-{XI_LIMIT:.6g}, {XI_LIMIT:.6g}), got {xi_grid!r}")
        if self.workers < 1:
            raise DomainError(f"workers must be at least 1, got {self.workers}")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "xi_grid", xi_grid)

    def echo(self) -> Dict[str, Any]:
        return {
            "thetas": list(self.thetas),
            "samples": self.sample_count,
            "seed": self.seed,
            "w0": self.w0,
            "xi_grid": list(self.xi_grid),
        }


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points: Tuple[Tuple[float, float], ...]
    dropped: int = 0


@dataclass
class SweepReport:
    experiment_id: str
    table: pd.DataFrame
    fits: Dict[str, Optional[RateFit]] = field(default_factory=dict)
    pass_flags: Dict[str, bool] = field(default_factory=dict)
    config_echo: Dict[str, Any] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)
    trailer: Tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    def summary(self) -> SweepSummary:
        fits = []
        for metric, fit in self.fits.items():
            if fit is None:
                fits.append(FitSummary(metric=metric, flat_zero=True))
            else:
                fits.append(FitSummary(metric=metric, slope=fit.slope, intercept=fit.intercept, r2=fit.r_squared))
        return SweepSummary(
            experiment_id=self.experiment_id,
            config=self.config_echo,
            fits=fits,
            checks=dict(self.pass_flags),
            extras=self.extras,
            passed=self.passed,
        )

    def write(self, out_dir: Union[str, Path]) -> Tuple[Path, Path]:
        out_dir = Path(out_dir)
        csv_path = write_csv_atomic(self.table, out_dir / f"{self.experiment_id}.csv", self.trailer)
        json_path = write_summary_atomic(self.summary(), out_dir / f"{self.experiment_id}.json")
        return csv_path, json_path


# --------------------------------------------------------------------------
# helpers


def _map(func: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    def guarded(item: T) -> R:
        try:
            return func(item)
        except Exception:
            logger.exception("sweep work item %r failed", item)
            raise

    if workers <= 1 or len(items) <= 1:
        return [guarded(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(guarded, items))


def fit_rate(points: Iterable[Tuple[float, float]]) -> RateFit:
    """
    Least-squares line through (log theta, log metric).

    Zero metrics are dropped and counted; non-finite or negative ones are
    rejected. Fewer than four usable points raise InsufficientDataError.
    """
    points = [(float(t), float(y)) for t, y in points]
    if any(not math.isfinite(y) or y < 0.0 for _, y in points):
        raise DomainError(f"metrics must be finite and nonnegative, got {points!r}")
    usable = [(t, y) for t, y in points if y > 0.0 and t > 0.0]
    if len(usable) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"need {MIN_FIT_POINTS} positive metrics for a rate fit, got {len(usable)}")
    log_points = tuple((math.log(t), math.log(y)) for t, y in usable)
    x, y = zip(*log_points)
    result = linregress(x, y)
    r_squared = min(max(float(result.rvalue) ** 2, 0.0), 1.0)
    return RateFit(float(result.slope), float(result.intercept), r_squared, log_points, len(points) - len(usable))


def _fit_or_flat(thetas: Sequence[float], metrics: Sequence[float], name: str) -> Optional[RateFit]:
    if all(y == 0.0 for y in metrics):
        logger.warning("metric %s is identically zero; reporting a flat-zero fit", name)
        return None
    fit = fit_rate(zip(thetas, metrics))
    logger.info("%s: slope %.4f, r^2 %.5f", name, fit.slope, fit.r_squared)
    return fit


def _rate_ok(fit: Optional[RateFit], min_slope: float, min_r2: float = 0.98) -> bool:
    return fit is None or (fit.slope >= min_slope and fit.r_squared >= min_r2)


def monotone_within(values: Sequence[float], band: float = MONOTONE_BAND, slack: float = 1e-12) -> bool:
    """values (ordered by decreasing theta) never rise by more than the band."""
    return all(b <= a * (1.0 + band) + slack for a, b in zip(values, values[1:]))


def _density_cap(theta: float, headroom: np.ndarray) -> np.ndarray:
    """Largest rho with S(theta, rho) <= headroom."""
    return np.exp(np.log1p(theta * headroom) / theta) if theta > 0.0 else np.exp(headroom)


def sample_budget_states(theta: float, w0: float, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    States (rho, m) inside the invariant region |u| + S(theta, rho) <= w0.

    u is uniform in [-0.9 w0, 0.9 w0]; at least 5% of the states are vacuum
    and 10% have rho in [1e-6, 1e-3] (log-uniform); the rest have rho
    uniform in [1e-6, rho_max(u)].
    """
    n_vacuum = max(1, math.ceil(VACUUM_SHARE * count))
    n_near = min(count - n_vacuum, math.ceil(NEAR_VACUUM_SHARE * count))
    n_bulk = count - n_vacuum - n_near
    u = rng.uniform(-0.9 * w0, 0.9 * w0, size=count)
    lo, hi = NEAR_VACUUM_RANGE
    near = np.exp(rng.uniform(math.log(lo), math.log(hi), size=n_near))
    cap = _density_cap(theta, w0 - np.abs(u[n_vacuum + n_near:]))
    bulk = MIN_DENSITY + rng.uniform(0.0, 1.0, size=n_bulk) * (cap - MIN_DENSITY)
    rho = np.concatenate((np.zeros(n_vacuum), near, bulk))
    return rho, np.where(rho > 0.0, rho * u, 0.0)


def _check_budget(theta: float, rho: np.ndarray, m: np.ndarray, w0: float):
    positive = rho > 0.0
    safe = np.where(positive, rho, 1.0)
    s = np.log(safe) if theta == 0.0 else np.expm1(theta * np.log(safe)) / theta
    excess = np.where(positive, np.abs(m / safe) + s - w0, -np.inf)
    if np.any(excess > 1e-12 * w0):
        raise AssertionError(f"sampler produced a state outside the budget (excess {float(np.max(excess)):.3e})")


def _states(config: SweepConfig, index: int, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([config.seed, index])
    sampler = config.sampler or sample_budget_states
    rho, m = sampler(theta, config.w0, config.sample_count, rng)
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    _check_budget(theta, rho, m, config.w0)
    return rho, m


def _piecewise_l1(
    first: RiemannSolution, second: RiemannSolution, window: Window
) -> Tuple[float, float]:
    """
    Composite-midpoint L^1 distance in (rho, m) at time t over [x_min, x_max],
    with every wave edge of either solution as a breakpoint.
    """
    t, x_min, x_max, n_samples = window
    if not (t > 0.0 and x_min < x_max and n_samples >= 1):
        raise DomainError(f"invalid window {window!r}")
    cuts = {x_min, x_max}
    for edge in first.edges + second.edges:
        if x_min < edge * t < x_max:
            cuts.add(edge * t)
    cuts = sorted(cuts)
    length = x_max - x_min
    total_rho = total_m = 0.0
    for a, b in zip(cuts, cuts[1:]):
        pieces = max(4, math.ceil(n_samples * (b - a) / length))
        h = (b - a) / pieces
        x = a + (np.arange(pieces) + 0.5) * h
        rho_1, m_1 = sample_arrays(first, x / t)
        rho_2, m_2 = sample_arrays(second, x / t)
        total_rho += float(np.sum(np.abs(rho_1 - rho_2))) * h
        total_m += float(np.sum(np.abs(m_1 - m_2))) * h
    return total_rho, total_m


def _sound_speed_at(solution: RiemannSolution, xi: float) -> float:
    """rho^theta at xi taken from log rho, so fan densities far below the float range still count; 0 in vacuum."""
    log_rho, _ = sample_primitive(solution, xi)
    if not np.isfinite(log_rho[0]):
        return 0.0
    return math.exp(solution.data.theta * float(log_rho[0]))


# --------------------------------------------------------------------------
# entropy and energy rates


def _entropy_item(config: SweepConfig):
    def item(indexed: Tuple[int, float]) -> List[Dict[str, float]]:
        index, theta = indexed
        rho, m = _states(config, index, theta)
        rows = []
        for xi in config.xi_grid:
            eta_t, q_t = theta_entropy_arrays(theta, rho, m, xi, config.quad)
            eta_0, q_0 = isothermal_entropy_arrays(rho, m, xi)
            f_values = f_xi_arrays(theta, rho, m, xi, xi)
            rows.append({
                "theta": theta,
                "xi": xi,
                "sup_gap_eta": float(np.max(np.abs(eta_t - eta_0))),
                "sup_gap_q": float(np.max(np.abs(q_t - q_0))),
                "sup_f_xi": float(np.max(np.abs(f_values))),
            })
        logger.debug("entropy rates at theta=%g done", theta)
        return rows

    return item


def entropy_rate_sweep(config: SweepConfig) -> SweepReport:
    """
    Sup over budget states and xi of the gap between the theta-family and
    the isothermal xi-family, and of |f_xi(xi)|; expected rates sqrt(theta)
    (or faster) and theta.
    """
    for xi in config.xi_grid:
        if abs(xi) > XI_LIMIT - XI_MARGIN:
            raise PreconditionError(f"xi={xi!r} is closer than {XI_MARGIN} to the admissible bound {XI_LIMIT:.6g}")
    logger.info("entropy rate sweep over %d thetas", len(config.thetas))
    blocks = _map(_entropy_item(config), list(enumerate(config.thetas)), config.workers)
    table = pd.DataFrame([row for block in blocks for row in block], columns=["theta", "xi", "sup_gap_eta", "sup_gap_q", "sup_f_xi"])

    per_theta = table.groupby("theta", sort=False)
    gap = per_theta[["sup_gap_eta", "sup_gap_q"]].max().max(axis=1).tolist()
    f_sup = per_theta["sup_f_xi"].max().tolist()
    thetas = list(config.thetas)
    gap_fit = _fit_or_flat(thetas, gap, "entropy gap")
    f_fit = _fit_or_flat(thetas, f_sup, "f_xi")

    w0 = config.w0
    envelope_scale = 5.0 * (math.exp(2.0 * w0) + w0 * math.exp(2.0 * w0))
    envelope = all(g <= envelope_scale * math.sqrt(t) for t, g in zip(thetas, gap) if t <= 0.1)
    flags = {
        "gap_rate": _rate_ok(gap_fit, 0.45),
        "f_xi_rate": _rate_ok(f_fit, 0.9),
        "gap_envelope": envelope,
        "gap_monotone": monotone_within(gap),
    }
    return SweepReport(
        "entropy_rate", table, {"entropy_gap": gap_fit, "f_xi": f_fit}, flags, config.echo(),
        {"sup_gap": gap, "sup_f_xi": f_sup},
    )


def _energy_item(config: SweepConfig):
    def item(indexed: Tuple[int, float]) -> Dict[str, float]:
        index, theta = indexed
        rho, m = _states(config, index, theta)
        eta_t, q_t = mechanical_energy_arrays(theta, rho, m)
        eta_0, q_0 = mechanical_energy_arrays(0.0, rho, m)
        return {
            "theta": theta,
            "sup_gap_eta_star": float(np.max(np.abs(eta_t - eta_0))),
            "sup_gap_q_star": float(np.max(np.abs(q_t - q_0))),
        }

    return item


def energy_rate_sweep(config: SweepConfig) -> SweepReport:
    """Sup over budget states of the mechanical-energy gap; expected rate theta."""
    logger.info("energy rate sweep over %d thetas", len(config.thetas))
    rows = _map(_energy_item(config), list(enumerate(config.thetas)), config.workers)
    table = pd.DataFrame(rows, columns=["theta", "sup_gap_eta_star", "sup_gap_q_star"])
    metric = table[["sup_gap_eta_star", "sup_gap_q_star"]].max(axis=1).tolist()
    fit = _fit_or_flat(list(config.thetas), metric, "energy gap")
    flags = {
        "energy_rate": _rate_ok(fit, 0.9),
        "energy_monotone": monotone_within(metric),
        "energy_decay": metric[-1] <= metric[0] + 1e-12,
    }
    return SweepReport("energy_rate", table, {"energy_gap": fit}, flags, config.echo(), {"sup_gap": metric})


# --------------------------------------------------------------------------
# Riemann limits


def _at_theta(data: RiemannData, theta: float) -> RiemannData:
    return RiemannData(theta, data.left, data.right)


def riemann_limit_sweep(data0: RiemannData, window: Window, config: SweepConfig) -> SweepReport:
    """
    L^1 distance on the window between the theta-solution and the
    isothermal solution of the same non-vacuum data, per theta.
    """
    if not (isinstance(data0.left, NonVacuum) and isinstance(data0.right, NonVacuum)):
        raise DomainError("the Riemann limit sweep needs non-vacuum data on both sides")
    limit = solve(_at_theta(data0, 0.0))

    def item(theta: float) -> Dict[str, Any]:
        data = _at_theta(data0, theta)
        l1_rho, l1_m = _piecewise_l1(solve(data), limit, window)
        return {"theta": theta, "l1_rho": l1_rho, "l1_m": l1_m, "pattern": classify(data).value}

    logger.info("Riemann limit sweep over %d thetas", len(config.thetas))
    rows = _map(item, list(config.thetas), config.workers)
    table = pd.DataFrame(rows, columns=["theta", "l1_rho", "l1_m", "pattern"])
    distance = (table["l1_rho"] + table["l1_m"]).tolist()
    first, last = distance[0], distance[-1]
    flags = {
        "riemann_decay": last <= 1e-2 * first or first == 0.0,
        "riemann_monotone": monotone_within(distance),
    }
    fits: Dict[str, Optional[RateFit]] = {}
    if len(distance) >= MIN_FIT_POINTS:
        fits["l1_distance"] = _fit_or_flat(list(config.thetas), distance, "riemann distance")
    extras = {"limit_pattern": classify(_at_theta(data0, 0.0)).value, "distance": distance}
    return SweepReport("riemann_limit", table, fits, flags, config.echo(), extras)


def decavitation_experiment(rho_l: float, u_l: float, rho_r: float, u_r: float, config: SweepConfig) -> SweepReport:
    """
    Threshold theta* of the vacuum middle state and the middle density on
    both sides of it, down to the isothermal middle state.
    """
    if not u_r > u_l:
        raise DomainError(f"decavitation needs u_R > u_L, got u_L={u_l!r}, u_R={u_r!r}")
    left = NonVacuum.from_density(rho_l, u_l)
    right = NonVacuum.from_density(rho_r, u_r)
    theta_star = decavitation_threshold(rho_l, u_l, rho_r, u_r)
    thetas = set(config.thetas)
    if theta_star is not None:
        thetas.update(t for t in (0.98 * theta_star, 1.02 * theta_star) if t <= THETA0)
    thetas = sorted(thetas, reverse=True) + [0.0]

    def item(theta: float) -> Dict[str, Any]:
        middle = middle_state(RiemannData(theta, left, right))
        vacuum = isinstance(middle, Vacuum)
        return {"theta": theta, "rho_mid": 0.0 if vacuum else middle.rho, "is_vacuum": vacuum}

    rows = _map(item, thetas, config.workers)
    table = pd.DataFrame(rows, columns=["theta", "rho_mid", "is_vacuum"])
    star_text = "none" if theta_star is None else f"{theta_star:.12g}"
    logger.info("decavitation threshold theta*=%s", star_text)

    limit_rho = float(table["rho_mid"].iloc[-1])
    positive = table["theta"] > 0.0
    if theta_star is None:
        below = positive
        above = pd.Series(False, index=table.index)
    else:
        below = positive & (table["theta"] < theta_star)
        above = table["theta"] > theta_star
    smallest = float(table.loc[positive, "rho_mid"].iloc[-1])
    flags = {
        "positive_below_threshold": bool((table.loc[below, "rho_mid"] > 0.0).all()),
        "vacuum_above_threshold": bool(table.loc[above, "is_vacuum"].all()),
        "isothermal_limit": abs(smallest - limit_rho) <= 1e-2 * max(1.0, limit_rho),
    }
    extras = {"theta_star": theta_star, "rho_mid_isothermal": limit_rho}
    return SweepReport(
        "decavitation", table, {}, flags, config.echo(), extras, trailer=(f"theta_star={star_text}",)
    )


def one_side_vacuum_experiment(
    rho_r: float, u_r: float, config: SweepConfig, window: Window = (1.0, -3.0, 3.0, 400)
) -> SweepReport:
    """
    Vacuum on the left of (rho_R, u_R): fan edges, the windowed distance to
    the isothermal solution, and the same for the non-vacuum approximating
    family whose left density is theta^(1/theta).
    """
    if not rho_r > 0.0:
        raise DomainError(f"rho_R must be positive, got {rho_r!r}")
    limit = one_side_vacuum_solution(0.0, rho_r, u_r)
    log_rho_r = math.log(rho_r)

    def item(theta: float) -> Dict[str, Any]:
        c_r = math.exp(theta * log_rho_r)
        solution = one_side_vacuum_solution(theta, rho_r, u_r)
        vacuum_edge = u_r - c_r / theta
        fan_edge = u_r + c_r
        # just inside the fan; the offset never passes the fan midpoint
        inside = vacuum_edge + min(EDGE_OFFSET, 0.5 * (fan_edge - vacuum_edge))
        l1_vacuum = sum(_piecewise_l1(solution, limit, window))
        approx = approximating_family(theta, rho_r, u_r)
        l1_approx = sum(_piecewise_l1(solve(approx), limit, window))
        budget = approximating_budget(theta, rho_r, u_r)
        return {
            "theta": theta,
            "vacuum_edge": vacuum_edge,
            "fan_edge": fan_edge,
            "fan_edge_bound": theta * abs(log_rho_r) * math.exp(theta * abs(log_rho_r)),
            "edge_sound_speed": _sound_speed_at(solution, inside),
            "edge_sound_speed_isothermal": _sound_speed_at(limit, inside),
            "l1_vacuum": l1_vacuum,
            "l1_approx": l1_approx,
            "approx_budget_ok": side_within_budget(theta, approx.left, budget) and side_within_budget(theta, approx.right, budget),
        }

    rows = _map(item, list(config.thetas), config.workers)
    columns = [
        "theta", "vacuum_edge", "fan_edge", "fan_edge_bound", "edge_sound_speed", "edge_sound_speed_isothermal",
        "l1_vacuum", "l1_approx", "approx_budget_ok",
    ]
    table = pd.DataFrame(rows, columns=columns)
    small = table["theta"] <= 0.07
    flags = {
        "vacuum_edge_diverges": bool((table.loc[small, "vacuum_edge"] <= -10.0).all()),
        "fan_edge_bound": bool(((table["fan_edge"] - (u_r + 1.0)).abs() <= table["fan_edge_bound"] + 1e-15).all()),
        "vacuum_distance_decay": table["l1_vacuum"].iloc[-1] <= 1e-2 * table["l1_vacuum"].iloc[0],
        "approx_distance_decay": table["l1_approx"].iloc[-1] <= 1e-2 * table["l1_approx"].iloc[0],
        "approx_budget": bool(table["approx_budget_ok"].all()),
        "edge_sound_speed_vanishes": bool(
            table["edge_sound_speed"].is_monotonic_decreasing
            and table["edge_sound_speed"].iloc[-1] < 1e-2 * table["edge_sound_speed_isothermal"].iloc[-1]
        ),
        "isothermal_sound_speed_one": bool((table["edge_sound_speed_isothermal"] == 1.0).all()),
    }
    extras = {"edge_offset": EDGE_OFFSET}
    return SweepReport("one_side_vacuum", table, {}, flags, config.echo(), extras)


# --------------------------------------------------------------------------
# dissipation


def dissipation_uniformity_sweep(
    riemann_data: RiemannData,
    grid: Grid1D,
    compact_set: TimeSpace,
    config: SweepConfig,
    t_end: float,
    cfl: float = 0.5,
) -> SweepReport:
    """
    Godunov run per theta on the same grid and data; the mechanical-energy
    dissipation over K must stay bounded uniformly in theta.
    """

    def item(theta: float) -> Dict[str, float]:
        sim = SimConfig(ThetaParam(theta), grid, t_end, cfl)
        result = run(sim, riemann_initial(grid, _at_theta(riemann_data, theta)), keep_levels=True)
        return {
            "theta": theta,
            "tv_estimate": dissipation_tv_estimate(theta, result, compact_set),
            "grid_floor": grid_floor(theta, result),
        }

    logger.info("dissipation sweep over %d thetas on %d cells", len(config.thetas), grid.n_cells)
    rows = _map(item, list(config.thetas), config.workers)
    table = pd.DataFrame(rows, columns=["theta", "tv_estimate", "grid_floor"])
    values = table["tv_estimate"].tolist()
    floor = float(table["grid_floor"].max())
    reference = max(values[:3])
    flags = {
        "bounded_by_largest_thetas": all(v <= 2.0 * reference + floor for v in values),
        "uniform_factor_two": max(values) <= 2.0 * min(values) + floor,
    }
    echo = dict(config.echo(), t_end=t_end, cfl=cfl, n_cells=grid.n_cells, compact_set=[list(compact_set[0]), list(compact_set[1])])
    extras = {"grid": {"x_min": grid.x_min, "x_max": grid.x_max, "n_cells": grid.n_cells, "boundary": grid.boundary.value}}
    return SweepReport("dissipation", table, {}, flags, echo, extras)
