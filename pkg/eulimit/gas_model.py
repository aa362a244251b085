"""
Gas model for the barotropic Euler system.

Pressure law p = rho^(2 theta + 1)/(2 theta + 1) for theta > 0 and p = rho for
the isothermal case theta = 0, together with fluxes, characteristic speeds,
Riemann invariants, the mechanical energy pair and the invariant-region
predicates used by the solver, the scheme and the sweeps.

Functions accept plain floats or numpy arrays for densities; states are
passed as ``ConservedState``.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple, Union

import numpy as np

from eulimit.errors import DomainError, VacuumInvariantError

logger = logging.getLogger(__name__)

THETA0 = 0.99


@dataclass(frozen=True)
class ThetaParam:
    """
    Adiabatic parameter theta = (gamma - 1)/2 for the limit experiments.

    Construction enforces 0 <= theta <= THETA0. The pure gas-model and
    Riemann functions accept any finite theta >= 0 as a float.
    """

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta) or self.theta < 0.0:
            raise DomainError(f"theta must be finite and nonnegative, got {self.theta!r}")
        if self.theta > THETA0:
            raise DomainError(f"theta must not exceed theta0={THETA0}, got {self.theta!r}")

    @property
    def gamma(self) -> float:
        return 1.0 + 2.0 * self.theta

    @property
    def isothermal(self) -> bool:
        return self.theta == 0.0

    def __float__(self) -> float:
        return float(self.theta)


ThetaLike = Union[float, ThetaParam]


@dataclass(frozen=True)
class BoundBudget:
    """Uniform Riemann-invariant bound w0."""

    w0: float

    def __post_init__(self):
        if not math.isfinite(self.w0) or self.w0 <= 0.0:
            raise DomainError(f"w0 must be positive, got {self.w0!r}")

    def __float__(self) -> float:
        return float(self.w0)


BudgetLike = Union[float, BoundBudget]


@dataclass(frozen=True)
class ConservedState:
    """Density and momentum; vacuum is rho = 0 with m = 0."""

    rho: float
    m: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.rho) and math.isfinite(self.m)):
            raise DomainError(f"state must be finite, got rho={self.rho!r}, m={self.m!r}")
        if self.rho < 0.0:
            raise DomainError(f"density must be nonnegative, got {self.rho!r}")
        if self.rho == 0.0 and self.m != 0.0:
            raise DomainError(f"vacuum state must carry zero momentum, got m={self.m!r}")

    @classmethod
    def from_velocity(cls, rho: float, u: float) -> "ConservedState":
        return cls(float(rho), float(rho) * float(u) if rho > 0.0 else 0.0)

    @classmethod
    def vacuum(cls) -> "ConservedState":
        return cls(0.0, 0.0)

    @property
    def is_vacuum(self) -> bool:
        return self.rho == 0.0

    @property
    def u(self) -> float:
        """Velocity; vacuum carries the label 0."""
        return self.m / self.rho if self.rho > 0.0 else 0.0


class EntropyPairValue(NamedTuple):
    eta: float
    q: float


def theta_value(theta: ThetaLike) -> float:
    """Validate theta for the pure functions and return it as a float."""
    value = float(theta)
    if not math.isfinite(value) or value < 0.0:
        raise DomainError(f"theta must be finite and nonnegative, got {theta!r}")
    return value


def _budget_value(w0: BudgetLike) -> float:
    return float(w0)


def _check_density(rho):
    arr = np.asarray(rho, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise DomainError(f"density must be nonnegative, got {rho!r}")
    return arr


def _scalar(value):
    arr = np.asarray(value)
    return float(arr) if arr.ndim == 0 else arr


def pressure(theta: ThetaLike, rho):
    """p(rho) = rho^(2 theta + 1)/(2 theta + 1); p = rho when theta = 0."""
    th = theta_value(theta)
    r = _check_density(rho)
    if th == 0.0:
        return _scalar(r.copy())
    gamma = 2.0 * th + 1.0
    return _scalar(np.power(r, gamma) / gamma)


def pressure_derivative(theta: ThetaLike, rho):
    """p'(rho) = rho^(2 theta), identically 1 in the isothermal case."""
    th = theta_value(theta)
    r = _check_density(rho)
    if th == 0.0:
        return _scalar(np.ones_like(r))
    return _scalar(np.power(r, 2.0 * th))


def sound_speed(theta: ThetaLike, rho):
    """c(rho) = rho^theta; c is identically 1 for the isothermal gas."""
    th = theta_value(theta)
    r = _check_density(rho)
    if th == 0.0:
        return _scalar(np.ones_like(r))
    return _scalar(np.power(r, th))


def scaled_density_from_log(theta: ThetaLike, log_rho):
    """(rho^theta - 1)/theta given log rho, or log rho itself when theta = 0."""
    th = theta_value(theta)
    lr = np.asarray(log_rho, dtype=float)
    if th == 0.0:
        return _scalar(lr.copy())
    return _scalar(np.expm1(th * lr) / th)


def scaled_density(theta: ThetaLike, rho):
    """
    Scaled density S = (rho^theta - 1)/theta, or ln rho when theta = 0.

    Evaluated as expm1(theta ln rho)/theta so the theta -> 0 limit is exact
    to rounding. Vacuum gives -1/theta for theta > 0 and -inf for theta = 0.
    """
    r = _check_density(rho)
    with np.errstate(divide="ignore"):
        log_rho = np.log(r)
    return scaled_density_from_log(theta, log_rho)


def riemann_invariants(theta: ThetaLike, state: ConservedState) -> Tuple[float, float]:
    """
    Riemann invariants (w1, w2).

    theta > 0: (u + rho^theta/theta, u - rho^theta/theta).
    theta = 0: (rho e^u, rho e^-u).
    """
    th = theta_value(theta)
    if state.is_vacuum:
        raise VacuumInvariantError("Riemann invariants are undefined at vacuum")
    u = state.u
    if th == 0.0:
        return state.rho * math.exp(u), state.rho * math.exp(-u)
    spread = state.rho ** th / th
    return u + spread, u - spread


def shifted_riemann_invariants(theta: ThetaLike, state: ConservedState) -> Tuple[float, float]:
    """
    Invariants with a finite isothermal limit: u +/- (rho^theta - 1)/theta.

    These are the quantities bounded by w0. Vacuum is allowed for theta > 0.
    """
    th = theta_value(theta)
    if state.is_vacuum and th == 0.0:
        raise VacuumInvariantError("isothermal shifted invariants diverge at vacuum")
    s = scaled_density(th, state.rho)
    return state.u + s, state.u - s


def invariant_budget(theta: ThetaLike, state: ConservedState, w0: BudgetLike, slack: float = 0.0) -> bool:
    """True iff |m|/rho + S(theta, rho) <= w0; vacuum always satisfies it."""
    if state.is_vacuum:
        return True
    th = theta_value(theta)
    return abs(state.u) + scaled_density(th, state.rho) <= _budget_value(w0) + slack


def density_bound(state: ConservedState, w0: BudgetLike, slack: float = 0.0) -> bool:
    """rho <= e^w0."""
    return state.rho <= math.exp(_budget_value(w0)) + slack


def theta_density_bound(theta: ThetaLike, w0: BudgetLike) -> float:
    """Largest density in the budget set, (1 + theta w0)^(1/theta) or e^w0."""
    th = theta_value(theta)
    w = _budget_value(w0)
    if th == 0.0:
        return math.exp(w)
    return math.exp(math.log1p(th * w) / th)


def momentum_bound(state: ConservedState, w0: BudgetLike, slack: float = 0.0) -> bool:
    """|m| <= rho(|ln rho| + w0)."""
    if state.is_vacuum:
        return True
    return abs(state.m) <= state.rho * (abs(math.log(state.rho)) + _budget_value(w0)) + slack


def riemann_invariant_product_bound(state: ConservedState, w0: BudgetLike, slack: float = 0.0) -> bool:
    """rho e^(|m|/rho) <= e^w0, compared in log form."""
    if state.is_vacuum:
        return True
    return math.log(state.rho) + abs(state.u) <= _budget_value(w0) + slack


def flux(theta: ThetaLike, state: ConservedState) -> Tuple[float, float]:
    """Physical flux (m, m^2/rho + p); vacuum carries no flux."""
    if state.is_vacuum:
        return 0.0, 0.0
    return state.m, state.m * state.u + pressure(theta, state.rho)


def flux_arrays(theta: ThetaLike, rho: np.ndarray, m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized flux with the vacuum convention."""
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    positive = rho > 0.0
    u = np.divide(m, rho, out=np.zeros_like(m), where=positive)
    momentum_flux = np.where(positive, m * u, 0.0) + np.asarray(pressure(theta, np.maximum(rho, 0.0)))
    return np.where(positive, m, 0.0), momentum_flux


def flux_jacobian(theta: ThetaLike, state: ConservedState) -> np.ndarray:
    """Jacobian of the flux in (rho, m)."""
    if state.is_vacuum:
        raise VacuumInvariantError("flux Jacobian is undefined at vacuum")
    u = state.u
    return np.array([[0.0, 1.0], [pressure_derivative(theta, state.rho) - u * u, 2.0 * u]])


def eigenvalues(theta: ThetaLike, state: ConservedState) -> Tuple[float, float]:
    """Characteristic speeds (u - c, u + c)."""
    th = theta_value(theta)
    if state.is_vacuum and th == 0.0:
        raise VacuumInvariantError("isothermal characteristic speeds are undefined at vacuum")
    c = sound_speed(th, state.rho)
    return state.u - c, state.u + c


def _energy_factors(theta: float, log_rho: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Internal-energy factors with a stable theta -> 0 limit.

    Returns (e, h) with rho * e the internal energy density and h the
    enthalpy-like coefficient of m in the energy flux.
    """
    if theta == 0.0:
        return log_rho, log_rho + 1.0
    half_growth = np.expm1(2.0 * theta * log_rho) / (2.0 * theta)
    return half_growth / (2.0 * theta + 1.0), half_growth + 1.0 / (2.0 * theta + 1.0)


def mechanical_energy_arrays(theta: ThetaLike, rho: np.ndarray, m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized mechanical energy pair; zero on vacuum cells."""
    th = theta_value(theta)
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    positive = rho > 0.0
    safe_rho = np.where(positive, rho, 1.0)
    u = np.where(positive, m / safe_rho, 0.0)
    e, h = _energy_factors(th, np.log(safe_rho))
    eta = np.where(positive, 0.5 * m * u + safe_rho * e, 0.0)
    q = np.where(positive, 0.5 * m * u * u + m * h, 0.0)
    return eta, q


def mechanical_energy_pair(theta: ThetaLike, state: ConservedState) -> EntropyPairValue:
    """
    Mechanical energy pair (eta*, q*).

    theta > 0:
        eta* = m^2/(2 rho) + rho (rho^(2 theta) - 1)/(2 theta (2 theta + 1))
        q*   = m^3/(2 rho^2) + m ((rho^(2 theta) - 1)/(2 theta) + 1/(2 theta + 1))
    theta = 0 uses the exact limit eta* = m^2/(2 rho) + rho ln rho and
    q* = m^3/(2 rho^2) + m (ln rho + 1). Both vanish at (1, 0) and at vacuum.
    """
    eta, q = mechanical_energy_arrays(theta, np.array([state.rho]), np.array([state.m]))
    return EntropyPairValue(float(eta[0]), float(q[0]))
