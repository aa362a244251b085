"""
First-order Godunov scheme driven by the exact Riemann solver.

Interface fluxes are the physical flux of the exact Riemann solution sampled
at x/t = 0. Besides the time loop the module carries the diagnostics built
on the discrete weak form of a run: conservation and entropy residuals
against smooth compactly supported test functions, the dissipation estimate
and the invariant-region audit.

A run keeps every time level when asked to (``keep_levels=True``); the
weak-form diagnostics need them.
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from eulimit.entropy import EnergyStarPair, PairSelector
from eulimit.errors import DomainError, SchemeFailureError
from eulimit.gas_model import (
    BoundBudget,
    BudgetLike,
    ConservedState,
    ThetaLike,
    ThetaParam,
    flux,
    flux_arrays,
    scaled_density,
    theta_value,
)
from eulimit.reports import write_csv_atomic
from eulimit.riemann import NonVacuum, RiemannData, Side, Vacuum, sample, sample_arrays, sample_interfaces, solve

logger = logging.getLogger(__name__)

MAX_STEPS = 1_000_000
NEGATIVE_DENSITY_TOLERANCE = 1e-12

TimeSpace = Tuple[Tuple[float, float], Tuple[float, float]]


# --------------------------------------------------------------------------
# grid, configuration and snapshots


class Boundary(str, enum.Enum):
    OUTFLOW = "outflow"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_cells: int
    boundary: Boundary = Boundary.OUTFLOW

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)) or self.x_min >= self.x_max:
            raise DomainError(f"grid needs x_min < x_max, got [{self.x_min!r}, {self.x_max!r}]")
        if self.n_cells < 4:
            raise DomainError(f"grid needs at least 4 cells, got {self.n_cells}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class SimConfig:
    """
    Time-stepping parameters.

    ``snapshot_times`` are the interior output times; the initial and final
    states are always recorded.
    """

    theta: ThetaParam
    grid: Grid1D
    t_end: float
    cfl: float = 0.5
    w0: Optional[BoundBudget] = None
    snapshot_times: Tuple[float, ...] = ()

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.9:
            raise DomainError(f"cfl must lie in (0, 0.9], got {self.cfl!r}")
        if not (math.isfinite(self.t_end) and self.t_end > 0.0):
            raise DomainError(f"t_end must be positive, got {self.t_end!r}")
        times = tuple(float(t) for t in self.snapshot_times)
        if list(times) != sorted(times) or any(t < 0.0 or t > self.t_end for t in times):
            raise DomainError(f"snapshot times must be sorted inside [0, t_end], got {times!r}")
        object.__setattr__(self, "snapshot_times", times)


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    """Cell values (rho, m) at one time; vacuum cells carry rho = m = 0."""

    time: float
    rho: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        m = np.asarray(self.m, dtype=float)
        if rho.shape != m.shape or rho.ndim != 1:
            raise DomainError("snapshot needs matching 1-D rho and m arrays")
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(m))):
            raise DomainError("snapshot values must be finite")
        if np.any(rho < 0.0):
            raise DomainError("snapshot densities must be nonnegative")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "m", np.where(rho > 0.0, m, 0.0))

    @classmethod
    def from_states(cls, time: float, cells: Sequence[ConservedState]) -> "FieldSnapshot":
        return cls(time, np.array([c.rho for c in cells]), np.array([c.m for c in cells]))

    @property
    def cells(self) -> List[ConservedState]:
        return [ConservedState(float(r), float(v)) for r, v in zip(self.rho, self.m)]

    def totals(self, dx: float) -> Tuple[float, float]:
        """Total mass and momentum."""
        return float(np.sum(self.rho) * dx), float(np.sum(self.m) * dx)


@dataclass
class RunResult:
    config: SimConfig
    snapshots: List[FieldSnapshot]
    max_speeds: List[float] = field(default_factory=list)
    levels: List[FieldSnapshot] = field(default_factory=list)

    @property
    def final(self) -> FieldSnapshot:
        return self.snapshots[-1]


# --------------------------------------------------------------------------
# fluxes and time stepping


def _side(state: ConservedState) -> Side:
    if state.is_vacuum:
        return Vacuum()
    return NonVacuum.from_density(state.rho, state.u)


def interface_flux(theta: ThetaLike, left: ConservedState, right: ConservedState) -> Tuple[float, float]:
    """Godunov flux: the physical flux of the exact Riemann solution at x/t = 0."""
    th = theta_value(theta)
    solution = solve(RiemannData(th, _side(left), _side(right)))
    return flux(th, sample(solution, 0.0))


def interface_states(theta: float, grid: Grid1D, rho: np.ndarray, m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """States at the n + 1 cell interfaces, boundaries included."""
    rho_ext, m_ext = _with_ghosts(grid, rho, m)
    return sample_interfaces(theta, rho_ext[:-1], m_ext[:-1], rho_ext[1:], m_ext[1:])


def interface_fluxes(theta: float, grid: Grid1D, rho: np.ndarray, m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    rho_face, m_face = interface_states(theta, grid, rho, m)
    return flux_arrays(theta, rho_face, m_face)


def _with_ghosts(grid: Grid1D, rho: np.ndarray, m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if grid.boundary is Boundary.PERIODIC:
        return np.concatenate(([rho[-1]], rho, [rho[0]])), np.concatenate(([m[-1]], m, [m[0]]))
    return np.concatenate(([rho[0]], rho, [rho[-1]])), np.concatenate(([m[0]], m, [m[-1]]))


def max_wave_speed(theta: float, grid: Grid1D, rho: np.ndarray, m: np.ndarray) -> float:
    """
    Largest |u| + c over non-vacuum cells and, for theta > 0, the vacuum fan
    edges u + rho^theta/theta of interfaces next to a vacuum cell.
    """
    positive = rho > 0.0
    if not np.any(positive):
        return 0.0
    safe = np.where(positive, rho, 1.0)
    u = np.where(positive, m / safe, 0.0)
    c = np.ones_like(safe) if theta == 0.0 else np.power(safe, theta)
    speed = float(np.max(np.where(positive, np.abs(u) + c, 0.0)))
    if theta > 0.0 and not np.all(positive):
        rho_ext, m_ext = _with_ghosts(grid, rho, m)
        pos_ext = rho_ext > 0.0
        safe_ext = np.where(pos_ext, rho_ext, 1.0)
        u_ext = np.where(pos_ext, m_ext / safe_ext, 0.0)
        reach = np.power(safe_ext, theta) / theta
        into_right = pos_ext[:-1] & ~pos_ext[1:]
        into_left = ~pos_ext[:-1] & pos_ext[1:]
        edges = np.concatenate((
            np.abs(u_ext[:-1] + reach[:-1])[into_right],
            np.abs(u_ext[1:] - reach[1:])[into_left],
        ))
        if edges.size:
            speed = max(speed, float(np.max(edges)))
    return speed


def step(config: SimConfig, snapshot: FieldSnapshot, dt: Optional[float] = None) -> FieldSnapshot:
    """
    One conservative update U_i - dt/dx (F_{i+1/2} - F_{i-1/2}).

    ``dt`` defaults to the CFL step. Densities that come out negative by
    rounding are clamped to vacuum; anything larger is a scheme failure.
    """
    th = float(config.theta)
    grid = config.grid
    if dt is None:
        speed = max_wave_speed(th, grid, snapshot.rho, snapshot.m)
        dt = config.cfl * grid.dx / speed if speed > 0.0 else config.t_end - snapshot.time
    if not (math.isfinite(dt) and dt > 0.0):
        raise SchemeFailureError(f"invalid time step {dt!r} at t={snapshot.time:.6g}")

    mass_flux, momentum_flux = interface_fluxes(th, grid, snapshot.rho, snapshot.m)
    ratio = dt / grid.dx
    rho = snapshot.rho - ratio * np.diff(mass_flux)
    m = snapshot.m - ratio * np.diff(momentum_flux)

    floor = -NEGATIVE_DENSITY_TOLERANCE * max(1.0, float(np.max(snapshot.rho)))
    worst = float(np.min(rho))
    if worst < floor:
        cell = int(np.argmin(rho))
        raise SchemeFailureError(f"negative density {worst:.3e} in cell {cell} at t={snapshot.time + dt:.6g}")
    if worst < 0.0:
        logger.warning("clamped round-off negative density %.3e to vacuum", worst)
        rho = np.maximum(rho, 0.0)
    m = np.where(rho > 0.0, m, 0.0)
    return FieldSnapshot(snapshot.time + dt, rho, m)


def run(config: SimConfig, initial: FieldSnapshot, keep_levels: bool = False) -> RunResult:
    """
    Advance ``initial`` to t_end, landing exactly on every snapshot time.

    Returns the initial state, the requested snapshots and the final state,
    the maximal wave speed of every step and, with ``keep_levels``, every
    time level.
    """
    th = float(config.theta)
    grid = config.grid
    if initial.rho.size != grid.n_cells:
        raise DomainError(f"initial data has {initial.rho.size} cells, grid has {grid.n_cells}")
    targets = sorted({t for t in config.snapshot_times if t > initial.time} | {config.t_end})
    result = RunResult(config, [initial])
    if keep_levels:
        result.levels.append(initial)

    current = initial
    for _ in range(MAX_STEPS):
        if not targets:
            break
        target = targets[0]
        speed = max_wave_speed(th, grid, current.rho, current.m)
        dt = config.cfl * grid.dx / speed if speed > 0.0 else target - current.time
        landing = current.time + dt >= target - 1e-14 * max(1.0, target)
        if landing:
            dt = target - current.time
        current = step(config, current, dt)
        result.max_speeds.append(speed)
        if keep_levels:
            result.levels.append(current)
        if landing:
            current = FieldSnapshot(target, current.rho, current.m)
            if keep_levels:
                result.levels[-1] = current
            result.snapshots.append(current)
            targets.pop(0)
            logger.debug("snapshot at t=%.6g after %d steps", target, len(result.max_speeds))
    else:
        raise SchemeFailureError(f"run did not reach t_end={config.t_end} in {MAX_STEPS} steps")
    logger.info("run finished: theta=%g, %d cells, %d steps", th, grid.n_cells, len(result.max_speeds))
    return result


def riemann_initial(grid: Grid1D, data: RiemannData) -> FieldSnapshot:
    """Exact cell averages of Riemann data with the jump at x = 0."""
    left = _side_values(data.left)
    right = _side_values(data.right)
    edges = grid.edges
    # fraction of each cell left of the origin
    weight = np.clip(-edges[:-1] / grid.dx, 0.0, 1.0)
    rho = weight * left[0] + (1.0 - weight) * right[0]
    m = weight * left[1] + (1.0 - weight) * right[1]
    return FieldSnapshot(0.0, rho, m)


def _side_values(side: Side) -> Tuple[float, float]:
    if isinstance(side, Vacuum):
        return 0.0, 0.0
    rho = side.rho
    return rho, rho * side.u


# --------------------------------------------------------------------------
# test functions


def smootherstep(z):
    """S(z) = 6z^5 - 15z^4 + 10z^3 on [0, 1], clamped outside."""
    z = np.clip(z, 0.0, 1.0)
    return z * z * z * (z * (6.0 * z - 15.0) + 10.0)


@dataclass(frozen=True)
class QuinticBump:
    """Tensor product of C^2 bumps 1 - S(|z|) in t and x."""

    t_center: float
    t_radius: float
    x_center: float
    x_radius: float

    def __post_init__(self):
        if not (self.t_radius > 0.0 and self.x_radius > 0.0):
            raise DomainError("bump radii must be positive")

    @property
    def identifier(self) -> str:
        return f"bump(t={self.t_center:g}+-{self.t_radius:g},x={self.x_center:g}+-{self.x_radius:g})"

    @property
    def support(self) -> TimeSpace:
        return (
            (self.t_center - self.t_radius, self.t_center + self.t_radius),
            (self.x_center - self.x_radius, self.x_center + self.x_radius),
        )

    def values(self, t, x) -> np.ndarray:
        bump_t = 1.0 - smootherstep(np.abs(np.asarray(t, dtype=float) - self.t_center) / self.t_radius)
        bump_x = 1.0 - smootherstep(np.abs(np.asarray(x, dtype=float) - self.x_center) / self.x_radius)
        return bump_t * bump_x


@dataclass(frozen=True)
class PlateauCutoff:
    """Equal to 1 on K = t_range x x_range, decaying smoothly to 0 over the ramps."""

    t_range: Tuple[float, float]
    x_range: Tuple[float, float]
    ramp_t: float
    ramp_x: float

    def __post_init__(self):
        if not (self.t_range[0] <= self.t_range[1] and self.x_range[0] <= self.x_range[1]):
            raise DomainError(f"empty plateau {self.t_range!r} x {self.x_range!r}")
        if not (self.ramp_t > 0.0 and self.ramp_x > 0.0):
            raise DomainError("plateau ramps must be positive")

    @classmethod
    def around(cls, compact_set: TimeSpace, ramp_fraction: float = 0.5) -> "PlateauCutoff":
        """Ramps proportional to the half-widths of K, floored for point-like sets."""
        (t0, t1), (x0, x1) = compact_set
        ramp_t = max(ramp_fraction * 0.5 * (t1 - t0), 1e-12)
        ramp_x = max(ramp_fraction * 0.5 * (x1 - x0), 1e-12)
        return cls((t0, t1), (x0, x1), ramp_t, ramp_x)

    @property
    def identifier(self) -> str:
        return f"plateau(t={self.t_range},x={self.x_range})"

    @property
    def support(self) -> TimeSpace:
        return (
            (self.t_range[0] - self.ramp_t, self.t_range[1] + self.ramp_t),
            (self.x_range[0] - self.ramp_x, self.x_range[1] + self.ramp_x),
        )

    @staticmethod
    def _profile(y, lo: float, hi: float, ramp: float):
        y = np.asarray(y, dtype=float)
        outside = np.maximum(lo - y, 0.0) + np.maximum(y - hi, 0.0)
        return 1.0 - smootherstep(outside / ramp)

    def values(self, t, x) -> np.ndarray:
        return self._profile(t, *self.t_range, self.ramp_t) * self._profile(x, *self.x_range, self.ramp_x)


@dataclass(frozen=True)
class ZeroTest:
    """phi = 0."""

    @property
    def identifier(self) -> str:
        return "zero"

    @property
    def support(self) -> TimeSpace:
        return (0.0, 0.0), (0.0, 0.0)

    def values(self, t, x) -> np.ndarray:
        return np.zeros(np.broadcast(np.asarray(t), np.asarray(x)).shape)


TestFunction = Union[QuinticBump, PlateauCutoff, ZeroTest]


# --------------------------------------------------------------------------
# weak-form diagnostics


@dataclass(frozen=True)
class EntropyResidualReport:
    test_function_id: str
    residual_value: float
    dissipation_tv_estimate: float
    compact_set: TimeSpace
    grid_floor: float

    @property
    def sign_ok(self) -> bool:
        return self.residual_value >= -self.grid_floor


def _check_support(result: RunResult, test_function: TestFunction):
    if isinstance(test_function, ZeroTest):
        return
    (t_lo, t_hi), (x_lo, x_hi) = test_function.support
    grid = result.config.grid
    if t_hi > result.config.t_end or x_lo <= grid.x_min or x_hi >= grid.x_max:
        raise DomainError(
            f"test function support {test_function.support!r} is not compact in "
            f"[0, {result.config.t_end}) x ({grid.x_min}, {grid.x_max})"
        )


def _require_levels(result: RunResult) -> List[FieldSnapshot]:
    if len(result.levels) < 2:
        raise DomainError("weak-form diagnostics need a run with keep_levels=True")
    return result.levels


def _weak_form(
    result: RunResult,
    test_function: TestFunction,
    densities,
    face_fluxes,
) -> np.ndarray:
    """
    sum_n dx sum_i D_i^n (phi_i^{n+1} - phi_i^n)
      + sum_n dt_n sum_i G_{i+1/2}^n (phi_{i+1}^{n+1} - phi_i^{n+1})
      + dx sum_i D_i^0 phi_i^0

    for each component of the densities D and interface fluxes G; the
    discrete counterpart of int int (D phi_t + G phi_x) + int D(0) phi(0).
    """
    levels = _require_levels(result)
    grid = result.config.grid
    x_ext = np.concatenate(([grid.x_min - 0.5 * grid.dx], grid.centers, [grid.x_max + 0.5 * grid.dx]))
    phi_prev = test_function.values(levels[0].time, x_ext)
    total = np.asarray(densities(levels[0])) @ phi_prev[1:-1] * grid.dx
    for now, nxt in zip(levels[:-1], levels[1:]):
        phi_next = test_function.values(nxt.time, x_ext)
        dt = nxt.time - now.time
        total = total + np.asarray(densities(now)) @ (phi_next[1:-1] - phi_prev[1:-1]) * grid.dx
        total = total + np.asarray(face_fluxes(now)) @ np.diff(phi_next) * dt
        phi_prev = phi_next
    return np.atleast_1d(total)


def conservation_residual(theta: ThetaLike, result: RunResult, test_function: TestFunction) -> Tuple[float, float]:
    """Weak form of the conservation laws for (mass, momentum); zero up to rounding."""
    th = theta_value(theta)
    _check_support(result, test_function)
    grid = result.config.grid

    def densities(level):
        return np.stack([level.rho, level.m])

    def face_fluxes(level):
        return np.stack(interface_fluxes(th, grid, level.rho, level.m))

    mass, momentum = _weak_form(result, test_function, densities, face_fluxes)
    return float(mass), float(momentum)


def _pair_sup(th: float, levels: Sequence[FieldSnapshot], selector: PairSelector) -> float:
    sup = 0.0
    for level in levels:
        eta, q = selector.arrays(th, level.rho, level.m)
        sup = max(sup, float(np.max(np.abs(eta))) + float(np.max(np.abs(q))))
    return sup


def _pair_residual(th: float, result: RunResult, selector: PairSelector, test_function: TestFunction) -> float:
    grid = result.config.grid

    def densities(level):
        return selector.arrays(th, level.rho, level.m)[0]

    def face_fluxes(level):
        rho_face, m_face = interface_states(th, grid, level.rho, level.m)
        return selector.arrays(th, rho_face, m_face)[1]

    return float(_weak_form(result, test_function, densities, face_fluxes)[0])


def grid_floor(theta: ThetaLike, result: RunResult, selector: PairSelector = EnergyStarPair()) -> float:
    """10 dx (sup|eta| + sup|q|) over the run."""
    th = theta_value(theta)
    levels = _require_levels(result)
    return 10.0 * result.config.grid.dx * _pair_sup(th, levels, selector)


def entropy_residual(
    theta: ThetaLike,
    result: RunResult,
    selector: PairSelector,
    test_function: TestFunction,
) -> EntropyResidualReport:
    """
    Discrete int int (eta phi_t + q phi_x) + int eta(U_0) phi(0, .) for one
    entropy pair; an entropy solution makes it >= 0 for phi >= 0.
    """
    th = theta_value(theta)
    _check_support(result, test_function)
    value = _pair_residual(th, result, selector, test_function)
    floor = grid_floor(th, result, selector)
    logger.debug("entropy residual %s against %s: %.6e (floor %.3e)", selector.label, test_function.identifier, value, floor)
    return EntropyResidualReport(test_function.identifier, value, max(value, 0.0), test_function.support, floor)


def dissipation_tv_estimate(theta: ThetaLike, result: RunResult, compact_set: TimeSpace, ramp_fraction: float = 0.5) -> float:
    """
    Total variation of the mechanical-energy dissipation over K, estimated by
    the weak-form residual against a plateau cutoff equal to 1 on K.

    Negative raw values are clamped to 0.
    """
    th = theta_value(theta)
    cutoff = PlateauCutoff.around(compact_set, ramp_fraction)
    _check_support(result, cutoff)
    raw = _pair_residual(th, result, EnergyStarPair(), cutoff)
    if raw < 0.0:
        logger.warning("negative dissipation estimate %.3e clamped to 0", raw)
        return 0.0
    return raw


@dataclass(frozen=True)
class AuditReport:
    """Worst excess of each invariant-region bound over all audited cells."""

    density_excess: float
    momentum_excess: float
    budget_excess: float
    worst_time: float
    slack: float

    @property
    def passed(self) -> bool:
        return max(self.density_excess, self.momentum_excess, self.budget_excess) <= self.slack


def invariant_audit(
    theta: ThetaLike, snapshots: Sequence[FieldSnapshot], w0: BudgetLike, slack: float = 1e-8
) -> AuditReport:
    """
    Check rho <= e^w0, |m| <= rho(|ln rho| + w0) and |u| + S(theta, rho) <= w0
    in every cell of every snapshot; excesses are positive when violated.
    """
    th = theta_value(theta)
    w = float(w0)
    worst = [-math.inf, -math.inf, -math.inf]
    worst_time = math.nan
    for snap in snapshots:
        positive = snap.rho > 0.0
        if not np.any(positive):
            continue
        rho = snap.rho[positive]
        m = snap.m[positive]
        u = m / rho
        excess = (
            float(np.max(rho - math.exp(w))),
            float(np.max(np.abs(m) - rho * (np.abs(np.log(rho)) + w))),
            float(np.max(np.abs(u) + np.asarray(scaled_density(th, rho)) - w)),
        )
        if max(excess) > max(worst):
            worst_time = snap.time
        worst = [max(a, b) for a, b in zip(worst, excess)]
    report = AuditReport(*worst, worst_time=worst_time, slack=slack)
    if not report.passed:
        logger.warning("invariant audit failed at t=%.6g: %r", worst_time, worst)
    return report


def l1_distance_to_exact(result_snapshot: FieldSnapshot, grid: Grid1D, data: RiemannData) -> Tuple[float, float]:
    """Cell-center L^1 distance in (rho, m) between a snapshot and the exact solution."""
    if result_snapshot.time <= 0.0:
        raise DomainError("the exact comparison needs t > 0")
    rho, m = sample_arrays(solve(data), grid.centers / result_snapshot.time)
    return (
        float(np.sum(np.abs(result_snapshot.rho - rho)) * grid.dx),
        float(np.sum(np.abs(result_snapshot.m - m)) * grid.dx),
    )


# --------------------------------------------------------------------------
# output


def snapshot_frame(snapshot: FieldSnapshot, grid: Grid1D, theta: ThetaLike) -> pd.DataFrame:
    """Columns x, rho, m, u, w1, w2; u and the invariants are NaN on vacuum cells."""
    th = theta_value(theta)
    positive = snapshot.rho > 0.0
    safe = np.where(positive, snapshot.rho, 1.0)
    u = np.where(positive, snapshot.m / safe, np.nan)
    if th == 0.0:
        w1 = np.where(positive, safe * np.exp(np.nan_to_num(u)), np.nan)
        w2 = np.where(positive, safe * np.exp(-np.nan_to_num(u)), np.nan)
    else:
        reach = np.power(safe, th) / th
        w1 = np.where(positive, u + reach, np.nan)
        w2 = np.where(positive, u - reach, np.nan)
    return pd.DataFrame({"x": grid.centers, "rho": snapshot.rho, "m": snapshot.m, "u": u, "w1": w1, "w2": w2})


def write_snapshot_csv(snapshot: FieldSnapshot, grid: Grid1D, theta: ThetaLike, out_dir: Union[str, Path]) -> Path:
    path = Path(out_dir) / f"snap_t{snapshot.time:.6}.csv"
    return write_csv_atomic(snapshot_frame(snapshot, grid, theta), path)
