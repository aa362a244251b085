"""
Exact Riemann solver for the barotropic Euler system, theta >= 0.

Densities are carried as log rho throughout so that states with
rho = O(theta^(1/theta)) stay representable after exp() underflows.

The middle state solves phi(x) = u1(x) - u2(x) = 0 in x = log rho, where u1 is
the forward 1-wave curve through the left state and u2 the backward 2-wave
curve through the right state; phi is strictly decreasing. The iteration is
a safeguarded Newton step inside a bisection bracket.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from eulimit.errors import DomainError, RootFindingError
from eulimit.gas_model import (
    THETA0,
    BudgetLike,
    ConservedState,
    ThetaLike,
    scaled_density,
    scaled_density_from_log,
    theta_value,
)

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
RESIDUAL_TOLERANCE = 1e-12
DECAVITATION_LOWER = 1e-6


# --------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class NonVacuum:
    """A side or middle state with positive density, stored as log rho."""

    log_rho: float
    u: float

    def __post_init__(self):
        if not (math.isfinite(self.log_rho) and math.isfinite(self.u)):
            raise DomainError(f"state must be finite, got log_rho={self.log_rho!r}, u={self.u!r}")

    @classmethod
    def from_density(cls, rho: float, u: float) -> "NonVacuum":
        if not rho > 0.0:
            raise DomainError(f"density must be positive, got {rho!r}")
        return cls(math.log(rho), float(u))

    @property
    def rho(self) -> float:
        return math.exp(self.log_rho)

    def as_conserved(self) -> ConservedState:
        rho = self.rho
        return ConservedState(rho, rho * self.u if rho > 0.0 else 0.0)


@dataclass(frozen=True)
class Vacuum:
    pass


Side = Union[NonVacuum, Vacuum]


def side_from_value(rho: Union[float, str], u: float) -> Side:
    """Side from a density that may be the literal "vacuum" or 0."""
    if rho == "vacuum" or rho == 0.0:
        return Vacuum()
    if isinstance(rho, str):
        raise DomainError(f"density must be a number or 'vacuum', got {rho!r}")
    return NonVacuum.from_density(float(rho), u)


@dataclass(frozen=True)
class RiemannData:
    theta: float
    left: Side
    right: Side

    def __post_init__(self):
        theta_value(self.theta)

    @classmethod
    def from_values(cls, theta: ThetaLike, rho_l, u_l: float, rho_r, u_r: float) -> "RiemannData":
        return cls(theta_value(theta), side_from_value(rho_l, u_l), side_from_value(rho_r, u_r))


@dataclass(frozen=True)
class Shock:
    family: int
    speed: float


@dataclass(frozen=True)
class Rarefaction:
    """Centered fan occupying head <= xi <= tail (head is the left edge)."""

    family: int
    head: float
    tail: float

    @property
    def width(self) -> float:
        return self.tail - self.head


@dataclass(frozen=True)
class VacuumGap:
    left_edge: float
    right_edge: float


Wave = Union[Shock, Rarefaction, VacuumGap]


class RegionTag(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    IV1 = "IV1"
    IV2 = "IV2"


@dataclass(frozen=True)
class _Piece:
    """Section of the self-similar solution ending at ``upper``."""

    kind: str  # "state", "fan" or "vacuum"
    upper: float
    state: Optional[NonVacuum] = None
    family: int = 0


@dataclass(frozen=True)
class RiemannSolution:
    data: RiemannData
    pattern: Tuple[Wave, ...]
    middle: Side
    pieces: Tuple[_Piece, ...]

    @property
    def edges(self) -> List[float]:
        """Finite xi-locations of every wave edge, sorted."""
        points = []
        for wave in self.pattern:
            if isinstance(wave, Shock):
                points.append(wave.speed)
            elif isinstance(wave, Rarefaction):
                points.extend([wave.head, wave.tail])
            else:
                points.extend([wave.left_edge, wave.right_edge])
        return sorted(p for p in points if math.isfinite(p))


# --------------------------------------------------------------------------
# wave curves


def _shock_radicand(theta: float, x_ref, x):
    """(1/rho_ref - 1/rho)(p(rho) - p(rho_ref)) in log variables; >= 0."""
    gamma = 2.0 * theta + 1.0
    return -np.expm1(x_ref - x) * np.expm1(gamma * (x - x_ref)) * np.exp(2.0 * theta * x_ref) / gamma


def _shock_radicand_slope(theta: float, x_ref, x):
    gamma = 2.0 * theta + 1.0
    a = -np.expm1(x_ref - x)
    b = np.expm1(gamma * (x - x_ref))
    return (np.exp(x_ref - x) * b + a * gamma * np.exp(gamma * (x - x_ref))) * np.exp(2.0 * theta * x_ref) / gamma


def _rarefaction_shift(theta: float, x_ref, x):
    """(rho^theta - rho_ref^theta)/theta, or x - x_ref when theta = 0."""
    if theta == 0.0:
        return x - x_ref
    return np.exp(theta * x_ref) * np.expm1(theta * (x - x_ref)) / theta


def _curve_pair(theta: float, xl, ul, xr, ur, x):
    """u1, u2 and their x-derivatives along the two wave curves."""
    x = np.asarray(x, dtype=float)
    # far bracket probes may overflow to inf; the sign of phi stays correct
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        c = np.exp(theta * x)
        shock_l = x > xl
        shock_r = x > xr
        root_l = np.sqrt(np.maximum(_shock_radicand(theta, xl, x), 0.0))
        root_r = np.sqrt(np.maximum(_shock_radicand(theta, xr, x), 0.0))
        u1 = np.where(shock_l, ul - root_l, ul - _rarefaction_shift(theta, xl, x))
        u2 = np.where(shock_r, ur + root_r, ur + _rarefaction_shift(theta, xr, x))
        slope_l = np.where(root_l > 1e-150, _shock_radicand_slope(theta, xl, x) / (2.0 * root_l), np.exp(theta * xl))
        slope_r = np.where(root_r > 1e-150, _shock_radicand_slope(theta, xr, x) / (2.0 * root_r), np.exp(theta * xr))
    du1 = np.where(shock_l, -slope_l, -c)
    du2 = np.where(shock_r, slope_r, c)
    return u1, u2, du1, du2


def _phi(theta: float, xl, ul, xr, ur, x):
    u1, u2, du1, du2 = _curve_pair(theta, xl, ul, xr, ur, x)
    return u1 - u2, du1 - du2, u1


def _check_positive(*values: float):
    for value in values:
        if not value > 0.0:
            raise DomainError(f"densities must be positive, got {value!r}")


def shock_curve_u(theta: ThetaLike, rho_l: float, u_l: float, rho: float) -> float:
    """
    u = u_L - sqrt((1/rho_L - 1/rho)(p(rho) - p(rho_L))).

    rho > rho_L is the 1-shock branch behind a left state, rho < rho_L the
    2-shock branch ahead of it.
    """
    th = theta_value(theta)
    _check_positive(rho_l, rho)
    q = _shock_radicand(th, math.log(rho_l), math.log(rho))
    return float(u_l - math.sqrt(max(float(q), 0.0)))


def rarefaction_curve_u(theta: ThetaLike, family: int, rho_ref: float, u_ref: float, rho: float) -> float:
    """
    Rarefaction curve through (rho_ref, u_ref), keeping the opposite invariant.

    family 1: u = u_ref + (rho_ref^theta - rho^theta)/theta  (theta = 0: u_ref + ln(rho_ref/rho))
    family 2: u = u_ref + (rho^theta - rho_ref^theta)/theta  (theta = 0: u_ref + ln(rho/rho_ref))

    Isothermal curves never reach vacuum: rho = 0 returns +inf (family 1)
    or -inf (family 2).
    """
    th = theta_value(theta)
    if family not in (1, 2):
        raise DomainError(f"family must be 1 or 2, got {family!r}")
    _check_positive(rho_ref)
    if rho < 0.0:
        raise DomainError(f"density must be nonnegative, got {rho!r}")
    sign = -1.0 if family == 1 else 1.0
    if rho == 0.0:
        if th == 0.0:
            return -sign * math.inf
        return u_ref - sign * rho_ref ** th / th
    return float(u_ref + sign * _rarefaction_shift(th, math.log(rho_ref), math.log(rho)))


# --------------------------------------------------------------------------
# classification


def _both_sides(data: RiemannData) -> Tuple[NonVacuum, NonVacuum]:
    if not (isinstance(data.left, NonVacuum) and isinstance(data.right, NonVacuum)):
        raise DomainError("both Riemann states must be non-vacuum")
    return data.left, data.right


def _tolerance(left: NonVacuum, right: NonVacuum) -> float:
    return RESIDUAL_TOLERANCE * (1.0 + abs(left.u) + abs(right.u))


def vacuum_criterion(theta: ThetaLike, data: RiemannData) -> bool:
    """
    True iff the middle state is vacuum: u_L + rho_L^theta/theta <= u_R - rho_R^theta/theta.

    Always false for theta = 0.
    """
    th = theta_value(theta)
    left, right = _both_sides(data)
    if th == 0.0:
        return False
    # theta (u_R - u_L) >= rho_L^theta + rho_R^theta
    return th * (right.u - left.u) >= math.exp(th * left.log_rho) + math.exp(th * right.log_rho)


def _shock_flags(data: RiemannData) -> Tuple[bool, bool]:
    left, right = _both_sides(data)
    th = data.theta
    tol = _tolerance(left, right)
    phi_left, _, _ = _phi(th, left.log_rho, left.u, right.log_rho, right.u, left.log_rho)
    phi_right, _, _ = _phi(th, left.log_rho, left.u, right.log_rho, right.u, right.log_rho)
    return bool(phi_left > tol), bool(phi_right > tol)


def classify(data: RiemannData) -> RegionTag:
    """
    Region of the right state relative to the wave curves through the left state.

    I: 1-shock + 2-rarefaction, II: two shocks, III: 1-rarefaction + 2-shock,
    IV / IV1: two rarefactions, IV2: two rarefactions around a vacuum.
    States on a curve resolve to the rarefaction side.
    """
    shock1, shock2 = _shock_flags(data)
    if shock1 and shock2:
        return RegionTag.II
    if shock1:
        return RegionTag.I
    if shock2:
        return RegionTag.III
    if data.theta == 0.0:
        return RegionTag.IV
    return RegionTag.IV2 if vacuum_criterion(data.theta, data) else RegionTag.IV1


# --------------------------------------------------------------------------
# middle state


def _initial_guess(theta: float, left: NonVacuum, right: NonVacuum) -> float:
    """log rho of the two-rarefaction approximation."""
    if theta == 0.0:
        return 0.5 * (left.log_rho + right.log_rho + left.u - right.u)
    c_mid = 0.5 * (math.exp(theta * left.log_rho) + math.exp(theta * right.log_rho)) + 0.5 * theta * (left.u - right.u)
    if c_mid <= 0.0:
        return min(left.log_rho, right.log_rho)
    return math.log(c_mid) / theta


def _solve_log_density(theta: float, left: NonVacuum, right: NonVacuum) -> Tuple[float, float]:
    """Safeguarded Newton-bisection for phi(x) = 0; returns (x, u) of the middle state."""
    args = (theta, left.log_rho, left.u, right.log_rho, right.u)
    tol = _tolerance(left, right)

    x0 = _initial_guess(theta, left, right)
    f0, _, u0 = _phi(*args, x0)
    if abs(f0) <= tol:
        return x0, float(u0)

    # expand a bracket lo < root < hi with phi(lo) > 0 > phi(hi)
    step = 1.0
    lo, hi, f_lo, f_hi = x0, x0, f0, f0
    for _ in range(MAX_ITERATIONS):
        if f0 > 0.0:
            lo, f_lo = hi, f_hi
            hi = x0 + step
            f_hi = _phi(*args, hi)[0]
            if f_hi <= 0.0:
                break
        else:
            hi, f_hi = lo, f_lo
            lo = x0 - step
            f_lo = _phi(*args, lo)[0]
            if f_lo >= 0.0:
                break
        step *= 2.0
    else:
        raise RootFindingError("could not bracket the middle state", (lo, hi), (float(f_lo), float(f_hi)))
    if f_lo == 0.0:
        return lo, float(_phi(*args, lo)[2])
    if f_hi == 0.0:
        return hi, float(_phi(*args, hi)[2])

    x = min(max(x0, lo), hi)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for iteration in range(MAX_ITERATIONS):
        f, df, u = _phi(*args, x)
        f, df = float(f), float(df)
        if abs(f) <= tol:
            logger.debug("middle state converged in %d iterations", iteration)
            return x, float(u)
        if f > 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= 4.0 * np.finfo(float).eps * max(1.0, abs(x)):
            # bracket collapsed onto a machine-resolution root
            return x, float(u)
        x_new = x - f / df if df < 0.0 else math.nan
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        x = x_new
    f_lo = float(_phi(*args, lo)[0])
    f_hi = float(_phi(*args, hi)[0])
    raise RootFindingError(
        "middle state did not converge", (lo, hi), (f_lo, f_hi), iterations=MAX_ITERATIONS
    )


def middle_state(data: RiemannData) -> Side:
    """
    Middle state where the 1-wave and 2-wave curves meet, or Vacuum when
    the vacuum criterion holds.
    """
    left, right = _both_sides(data)
    th = data.theta
    if th > 0.0 and vacuum_criterion(th, data):
        return Vacuum()
    x, u = _solve_log_density(th, left, right)
    return NonVacuum(x, u)


# --------------------------------------------------------------------------
# full solution and sampling


def _speed(theta: float, state: NonVacuum) -> float:
    return 1.0 if theta == 0.0 else math.exp(theta * state.log_rho)


def shock_speed(ahead_or_behind: NonVacuum, middle: NonVacuum) -> float:
    """Rankine-Hugoniot speed between a side state and the middle state."""
    return ahead_or_behind.u + (middle.u - ahead_or_behind.u) / (-math.expm1(ahead_or_behind.log_rho - middle.log_rho))


def _vacuum_edge_speed(theta: float, state: NonVacuum, family: int) -> float:
    """Fan edge bordering vacuum: w1 of the left state, w2 of the right state."""
    if theta == 0.0:
        return math.inf if family == 1 else -math.inf
    spread = math.exp(theta * state.log_rho) / theta
    return state.u + spread if family == 1 else state.u - spread


def solve(data: RiemannData) -> RiemannSolution:
    """Exact self-similar solution for any combination of vacuum and non-vacuum sides."""
    th = data.theta
    left, right = data.left, data.right

    if isinstance(left, Vacuum) and isinstance(right, Vacuum):
        pattern = (VacuumGap(-math.inf, math.inf),)
        return RiemannSolution(data, pattern, Vacuum(), (_Piece("vacuum", math.inf),))

    if isinstance(left, Vacuum):
        edge = _vacuum_edge_speed(th, right, 2)
        head_state = right.u + _speed(th, right)
        waves: List[Wave] = []
        pieces: List[_Piece] = []
        if math.isfinite(edge):
            waves.append(VacuumGap(-math.inf, edge))
            pieces.append(_Piece("vacuum", edge))
        waves.append(Rarefaction(2, edge, head_state))
        pieces.append(_Piece("fan", head_state, right, 2))
        pieces.append(_Piece("state", math.inf, right))
        return RiemannSolution(data, tuple(waves), Vacuum(), tuple(pieces))

    if isinstance(right, Vacuum):
        edge = _vacuum_edge_speed(th, left, 1)
        head = left.u - _speed(th, left)
        waves = [Rarefaction(1, head, edge)]
        pieces = [_Piece("state", head, left), _Piece("fan", edge, left, 1)]
        if math.isfinite(edge):
            waves.append(VacuumGap(edge, math.inf))
            pieces.append(_Piece("vacuum", math.inf))
        return RiemannSolution(data, tuple(waves), Vacuum(), tuple(pieces))

    middle = middle_state(data)
    if isinstance(middle, Vacuum):
        w1 = _vacuum_edge_speed(th, left, 1)
        w2 = _vacuum_edge_speed(th, right, 2)
        fan1 = Rarefaction(1, left.u - _speed(th, left), w1)
        fan2 = Rarefaction(2, w2, right.u + _speed(th, right))
        pattern = (fan1, VacuumGap(w1, w2), fan2)
        pieces = (
            _Piece("state", fan1.head, left),
            _Piece("fan", fan1.tail, left, 1),
            _Piece("vacuum", w2),
            _Piece("fan", fan2.tail, right, 2),
            _Piece("state", math.inf, right),
        )
        return RiemannSolution(data, pattern, middle, pieces)

    shock1, shock2 = _shock_flags(data)
    c_mid = _speed(th, middle)
    pieces_list: List[_Piece] = []
    if shock1:
        wave1: Wave = Shock(1, shock_speed(left, middle))
        pieces_list.append(_Piece("state", wave1.speed, left))
    else:
        head = left.u - _speed(th, left)
        wave1 = Rarefaction(1, head, max(head, middle.u - c_mid))
        pieces_list.append(_Piece("state", wave1.head, left))
        pieces_list.append(_Piece("fan", wave1.tail, left, 1))
    if shock2:
        wave2: Wave = Shock(2, shock_speed(right, middle))
        pieces_list.append(_Piece("state", wave2.speed, middle))
    else:
        tail = right.u + _speed(th, right)
        wave2 = Rarefaction(2, min(tail, middle.u + c_mid), tail)
        pieces_list.append(_Piece("state", wave2.head, middle))
        pieces_list.append(_Piece("fan", wave2.tail, right, 2))
    pieces_list.append(_Piece("state", math.inf, right))
    return RiemannSolution(data, (wave1, wave2), middle, tuple(pieces_list))


def _fan_arrays(theta: float, anchor: NonVacuum, family: int, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(log rho, u) inside a centered fan anchored at a side state."""
    sign = 1.0 if family == 2 else -1.0
    if theta == 0.0:
        log_rho = anchor.log_rho - sign * anchor.u + sign * xi - 1.0
        return log_rho, xi - sign
    c_ref = math.exp(theta * anchor.log_rho)
    c = (c_ref + sign * theta * (xi - anchor.u)) / (theta + 1.0)
    with np.errstate(divide="ignore"):
        log_rho = np.where(c > 0.0, np.log(np.maximum(c, 0.0)) / theta, -np.inf)
    u = (xi + theta * anchor.u - sign * c_ref) / (theta + 1.0)
    return log_rho, u


def sample_primitive(solution: RiemannSolution, xi) -> Tuple[np.ndarray, np.ndarray]:
    """
    (log rho, u) of the solution at self-similar coordinates xi.

    Vacuum gives log rho = -inf and u = nan. Fan edges belong to the fan.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    log_rho = np.full_like(xi, -np.inf)
    u = np.full_like(xi, np.nan)
    assigned = np.zeros(xi.shape, dtype=bool)
    th = solution.data.theta
    for piece in solution.pieces:
        if piece.kind == "fan":
            mask = ~assigned & (xi <= piece.upper)
        else:
            mask = ~assigned & ((xi < piece.upper) | (piece.upper == math.inf))
        if not np.any(mask):
            continue
        if piece.kind == "state":
            log_rho[mask] = piece.state.log_rho
            u[mask] = piece.state.u
        elif piece.kind == "fan":
            fan_log_rho, fan_u = _fan_arrays(th, piece.state, piece.family, xi[mask])
            log_rho[mask] = fan_log_rho
            u[mask] = np.where(np.isfinite(fan_log_rho), fan_u, np.nan)
        assigned |= mask
    return log_rho, u


def sample_arrays(solution: RiemannSolution, xi) -> Tuple[np.ndarray, np.ndarray]:
    """(rho, m) at xi; vacuum and underflowed densities give zeros."""
    log_rho, u = sample_primitive(solution, xi)
    rho = np.exp(log_rho)
    m = np.where(rho > 0.0, rho * np.nan_to_num(u), 0.0)
    return rho, m


def sample(solution: RiemannSolution, xi: float) -> ConservedState:
    """Conserved state of the solution at xi = x/t."""
    rho, m = sample_arrays(solution, np.array([xi]))
    return ConservedState(float(rho[0]), float(m[0]))


def one_side_vacuum_solution(theta: ThetaLike, rho_r: float, u_r: float) -> RiemannSolution:
    """Solution with vacuum on the left of (rho_R, u_R)."""
    th = theta_value(theta)
    return solve(RiemannData(th, Vacuum(), NonVacuum.from_density(rho_r, u_r)))


# --------------------------------------------------------------------------
# vectorized interface sampling for the finite-volume scheme


def _middle_arrays(theta: float, xl, ul, xr, ur) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized middle state (log rho, u) for non-vacuum pairs without vacuum middle."""
    tol = RESIDUAL_TOLERANCE * (1.0 + np.abs(ul) + np.abs(ur))
    if theta == 0.0:
        x0 = 0.5 * (xl + xr + ul - ur)
    else:
        c_mid = 0.5 * (np.exp(theta * xl) + np.exp(theta * xr)) + 0.5 * theta * (ul - ur)
        with np.errstate(divide="ignore", invalid="ignore"):
            x0 = np.where(c_mid > 0.0, np.log(np.maximum(c_mid, 1e-300)) / theta, np.minimum(xl, xr))
    f0 = _phi(theta, xl, ul, xr, ur, x0)[0]
    lo = np.where(f0 > 0.0, x0, -np.inf)
    hi = np.where(f0 > 0.0, np.inf, x0)
    step = 1.0
    for _ in range(MAX_ITERATIONS):
        need_hi = ~np.isfinite(hi)
        need_lo = ~np.isfinite(lo)
        if not (np.any(need_hi) or np.any(need_lo)):
            break
        trial = np.where(need_hi, x0 + step, x0 - step)
        f_trial = _phi(theta, xl, ul, xr, ur, trial)[0]
        hi = np.where(need_hi & (f_trial <= 0.0), trial, hi)
        lo = np.where(need_hi & (f_trial > 0.0), trial, lo)
        lo = np.where(need_lo & (f_trial >= 0.0), trial, lo)
        hi = np.where(need_lo & (f_trial < 0.0), trial, hi)
        step *= 2.0
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise RootFindingError("could not bracket interface middle states")

    x = np.clip(x0, lo, hi)
    active = np.abs(f0) > tol
    x = np.where(active, x, x0)
    for _ in range(MAX_ITERATIONS):
        if not np.any(active):
            break
        f, df, _ = _phi(theta, xl, ul, xr, ur, x)
        done = np.abs(f) <= tol
        lo = np.where(active & (f > 0.0), x, lo)
        hi = np.where(active & (f < 0.0), x, hi)
        collapsed = (hi - lo) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(x))
        active &= ~(done | collapsed)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - f / df
        inside = (newton > lo) & (newton < hi) & (df < 0.0)
        x = np.where(active, np.where(inside, newton, 0.5 * (lo + hi)), x)
    if np.any(active):
        bad = int(np.argmax(active))
        raise RootFindingError(
            "interface middle state did not converge", (float(lo[bad]), float(hi[bad])), iterations=MAX_ITERATIONS
        )
    return x, _phi(theta, xl, ul, xr, ur, x)[2]


def _fan_at_origin(theta: float, x_ref, u_ref, family: int) -> Tuple[np.ndarray, np.ndarray]:
    sign = 1.0 if family == 2 else -1.0
    if theta == 0.0:
        return x_ref - sign * u_ref - 1.0, np.full_like(x_ref, -sign)
    c_ref = np.exp(theta * x_ref)
    c = (c_ref - sign * theta * u_ref) / (theta + 1.0)
    with np.errstate(divide="ignore"):
        log_rho = np.where(c > 0.0, np.log(np.maximum(c, 1e-300)) / theta, -np.inf)
    return log_rho, (theta * u_ref - sign * c_ref) / (theta + 1.0)


def sample_interfaces(theta: ThetaLike, rho_l, m_l, rho_r, m_r) -> Tuple[np.ndarray, np.ndarray]:
    """
    (rho, m) of the exact Riemann solution at xi = 0 for arrays of interface pairs.

    Same solution as ``solve``/``sample``; cells with rho <= 0 are vacuum.
    """
    th = theta_value(theta)
    shape = np.broadcast(np.asarray(rho_l), np.asarray(m_l), np.asarray(rho_r), np.asarray(m_r)).shape
    rho_l, m_l, rho_r, m_r = (
        np.atleast_1d(np.broadcast_to(np.asarray(a, dtype=float), shape)).ravel() for a in (rho_l, m_l, rho_r, m_r)
    )
    vac_l = rho_l <= 0.0
    vac_r = rho_r <= 0.0
    xl = np.log(np.where(vac_l, 1.0, rho_l))
    xr = np.log(np.where(vac_r, 1.0, rho_r))
    ul = np.where(vac_l, 0.0, m_l / np.where(vac_l, 1.0, rho_l))
    ur = np.where(vac_r, 0.0, m_r / np.where(vac_r, 1.0, rho_r))
    cl = np.ones_like(xl) if th == 0.0 else np.exp(th * xl)
    cr = np.ones_like(xr) if th == 0.0 else np.exp(th * xr)
    fan1_x, fan1_u = _fan_at_origin(th, xl, ul, 1)
    fan2_x, fan2_u = _fan_at_origin(th, xr, ur, 2)
    if th == 0.0:
        w1 = np.full_like(xl, np.inf)
        w2 = np.full_like(xr, -np.inf)
    else:
        w1 = ul + cl / th
        w2 = ur - cr / th

    out_x = np.full(xl.shape, -np.inf)
    out_u = np.zeros(xl.shape)

    def put(mask, x_val, u_val):
        out_x[mask] = x_val[mask]
        out_u[mask] = u_val[mask]

    # left state next to vacuum: L | 1-fan | vacuum
    left_fan = ~vac_l & vac_r
    # vacuum next to right state: vacuum | 2-fan | R
    right_fan = vac_l & ~vac_r
    both = ~vac_l & ~vac_r
    if th > 0.0:
        cavity = both & (th * (ur - ul) >= cl + cr)
        left_fan |= cavity
        right_fan |= cavity
        both &= ~cavity

    put(left_fan & (0.0 < ul - cl), xl, ul)
    put(left_fan & (ul - cl <= 0.0) & (0.0 <= w1), fan1_x, fan1_u)
    put(right_fan & (w2 <= 0.0) & (0.0 <= ur + cr), fan2_x, fan2_u)
    put(right_fan & (ur + cr < 0.0), xr, ur)

    if np.any(both):
        idx = np.nonzero(both)[0]
        bxl, bul, bxr, bur, bcl, bcr = (a[idx] for a in (xl, ul, xr, ur, cl, cr))
        xm, um = _middle_arrays(th, bxl, bul, bxr, bur)
        cm = np.ones_like(xm) if th == 0.0 else np.exp(th * xm)
        shock1 = xm - bxl > 1e-13
        shock2 = xm - bxr > 1e-13
        with np.errstate(divide="ignore", invalid="ignore"):
            sigma1 = bul + (um - bul) / (-np.expm1(bxl - xm))
            sigma2 = bur + (um - bur) / (-np.expm1(bxr - xm))

        left_of_1 = np.where(shock1, 0.0 < sigma1, 0.0 < bul - bcl)
        in_fan1 = ~shock1 & ~left_of_1 & (0.0 <= um - cm)
        past_1 = ~left_of_1 & ~in_fan1
        left_of_2 = np.where(shock2, 0.0 < sigma2, 0.0 < um + cm)
        in_fan2 = ~shock2 & ~left_of_2 & (0.0 <= bur + bcr)

        res_x = np.select(
            [left_of_1, in_fan1, past_1 & left_of_2, past_1 & in_fan2],
            [bxl, fan1_x[idx], xm, fan2_x[idx]],
            default=bxr,
        )
        res_u = np.select(
            [left_of_1, in_fan1, past_1 & left_of_2, past_1 & in_fan2],
            [bul, fan1_u[idx], um, fan2_u[idx]],
            default=bur,
        )
        out_x[idx] = res_x
        out_u[idx] = res_u

    rho = np.exp(out_x)
    m = np.where(rho > 0.0, rho * out_u, 0.0)
    return rho.reshape(shape), m.reshape(shape)


# --------------------------------------------------------------------------
# decavitation and the approximating family


def decavitation_threshold(rho_l: float, u_l: float, rho_r: float, u_r: float) -> Optional[float]:
    """
    theta* solving (u_R - u_L) theta = rho_L^theta + rho_R^theta in (0, theta0].

    A vacuum middle state exists iff theta >= theta*. Returns None when there
    is no sign change on (1e-6, theta0].
    """
    _check_positive(rho_l, rho_r)
    jump = u_r - u_l
    if jump <= 0.0:
        return None
    log_l, log_r = math.log(rho_l), math.log(rho_r)

    def excess(theta: float) -> float:
        return jump * theta - math.exp(theta * log_l) - math.exp(theta * log_r)

    lower, upper = excess(DECAVITATION_LOWER), excess(THETA0)
    if lower >= 0.0 or upper < 0.0:
        logger.info("no decavitation threshold in (%g, %g]", DECAVITATION_LOWER, THETA0)
        return None
    if upper == 0.0:
        return THETA0
    return float(brentq(excess, DECAVITATION_LOWER, THETA0, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=MAX_ITERATIONS))


def approximating_budget(theta: ThetaLike, rho_r: float, u_r: float) -> float:
    """w0 = |u_R| + |S(theta, rho_R)| + 2 for the approximating family."""
    return abs(u_r) + abs(float(scaled_density(theta, rho_r))) + 2.0


def approximating_family(theta: ThetaLike, rho_r: float, u_r: float, scale: float = 1.0) -> RiemannData:
    """
    Non-vacuum data approaching the one-sided vacuum problem:

        rho_L = scale theta^(1/theta),  u_L = u_R - (rho_R^theta - rho_L^theta)/theta

    so the left state lies on the 2-rarefaction curve through the right state.
    rho_L is built in log space and may underflow as a float without harm.
    """
    th = theta_value(theta)
    if th == 0.0:
        raise DomainError("the approximating family needs theta > 0")
    _check_positive(rho_r, scale)
    log_rho_l = math.log(scale) + math.log(th) / th
    log_rho_r = math.log(rho_r)
    u_l = u_r - float(_rarefaction_shift(th, log_rho_l, log_rho_r))
    return RiemannData(th, NonVacuum(log_rho_l, u_l), NonVacuum(log_rho_r, float(u_r)))


def side_within_budget(theta: ThetaLike, side: Side, w0: BudgetLike, slack: float = 0.0) -> bool:
    """Invariant budget for a log-density side; vacuum passes."""
    if isinstance(side, Vacuum):
        return True
    return abs(side.u) + float(scaled_density_from_log(theta, side.log_rho)) <= float(w0) + slack
