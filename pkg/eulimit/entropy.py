"""
Weak entropy machinery.

The weak entropy kernel chi, the quadrature-based entropy pairs of the
isentropic gas, the exponential xi-family of the isothermal gas together with
its theta > 0 counterpart, and the gap functionals measuring how fast the
latter approach the former as theta -> 0.

All tau-averages go through ``eulimit.quadrature`` and are kept in log form;
the normalizing constant of the kernel only appears in the s-space oracle.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import betaln

from eulimit.errors import (
    DomainError,
    PreconditionError,
    QuadratureAccuracyError,
    UnsupportedThetaError,
)
from eulimit.gas_model import (
    BudgetLike,
    ConservedState,
    EntropyPairValue,
    ThetaLike,
    flux_arrays,
    flux_jacobian,
    invariant_budget,
    mechanical_energy_arrays,
    mechanical_energy_pair,
    scaled_density,
    theta_value,
)
from eulimit.quadrature import (
    AdaptiveOracle,
    QuadratureSpec,
    log_tilted_masses,
    oracle_average,
    oracle_interval_integral,
    tilted_rule,
    weight_exponent,
)

logger = logging.getLogger(__name__)

XI_LIMIT = math.sqrt(2.0) - 1.0
DEFAULT_QUADRATURE = QuadratureSpec()


def _positive_theta(theta: ThetaLike) -> float:
    th = theta_value(theta)
    if th == 0.0:
        raise UnsupportedThetaError("the weak entropy kernel has no isothermal form; use the xi-family")
    return th


def _check_xi(xi: float, limit: float = 1.0) -> float:
    xi = float(xi)
    if not abs(xi) < limit:
        raise DomainError(f"xi must satisfy |xi| < {limit:.6g}, got {xi!r}")
    return xi


def xi_slope(xi: float) -> float:
    """kappa = xi/(1 - xi^2), the exponent of the xi-family."""
    return xi / (1.0 - xi * xi)


# --------------------------------------------------------------------------
# kernel


@dataclass(frozen=True)
class KernelPoint:
    theta: float
    rho: float
    u: float
    s: float

    def __post_init__(self):
        if self.rho < 0.0:
            raise DomainError(f"density must be nonnegative, got {self.rho!r}")


def kernel_log_normalization(theta: ThetaLike) -> float:
    """log a_theta = (1/theta) log theta - log B(1/2, lam + 1)."""
    th = _positive_theta(theta)
    return math.log(th) / th - float(betaln(0.5, weight_exponent(th) + 1.0))


def kernel_chi_values(theta: ThetaLike, rho: float, u: float, s) -> np.ndarray:
    """chi(rho, u, s) for an array of kinetic velocities s."""
    th = _positive_theta(theta)
    s = np.asarray(s, dtype=float)
    if rho == 0.0:
        return np.zeros_like(s)
    lam = weight_exponent(th)
    reach = rho ** th / th
    offset = np.abs(s - u)
    inside = offset < reach
    gap = np.where(inside, reach - offset, 1.0)
    log_chi = kernel_log_normalization(th) + lam * (np.log(gap) + np.log(reach + offset))
    return np.where(inside, np.exp(log_chi), 0.0)


def kernel_chi(point: KernelPoint) -> float:
    """
    a_theta [(rho^theta/theta)^2 - (s - u)^2]_+^lam, evaluated in log space.

    Zero outside |s - u| < rho^theta/theta and at vacuum.
    """
    return float(kernel_chi_values(point.theta, point.rho, point.u, np.array([point.s]))[0])


# --------------------------------------------------------------------------
# entropy weights psi(s)


@dataclass(frozen=True)
class PolynomialWeight:
    """psi(s) = sum_k coefficients[k] s^k."""

    coefficients: Tuple[float, ...]

    def evaluate(self, theta: float, s, order: int = 0):
        poly = Polynomial(self.coefficients)
        return poly.deriv(order)(s) if order else poly(s)


@dataclass(frozen=True)
class EnergyStar:
    """psi*(s) = s^2/2 - 1/(2 theta (2 theta + 1)); generates the mechanical energy."""

    def evaluate(self, theta: float, s, order: int = 0):
        s = np.asarray(s, dtype=float)
        if order == 0:
            return 0.5 * s * s - 1.0 / (2.0 * theta * (2.0 * theta + 1.0))
        if order == 1:
            return s
        return np.full_like(s, 1.0 if order == 2 else 0.0)


@dataclass(frozen=True)
class ExpXi:
    """psi(s) = [Z(0)/Z(kappa/theta)] e^(kappa s), the theta-counterpart of the xi-family."""

    xi: float
    quad: QuadratureSpec = field(default=DEFAULT_QUADRATURE)

    def __post_init__(self):
        _check_xi(self.xi)

    def evaluate(self, theta: float, s, order: int = 0):
        kappa = xi_slope(self.xi)
        scale = psi_xi_coefficient(theta, self.xi, self.quad)
        return scale * kappa ** order * np.exp(kappa * np.asarray(s, dtype=float))


@dataclass(frozen=True)
class TabulatedWeight:
    """Cubic-spline interpolant through (s, psi) samples."""

    s_values: Tuple[float, ...]
    psi_values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.s_values) != len(self.psi_values) or len(self.s_values) < 4:
            raise DomainError("tabulated weight needs at least four matching samples")

    def evaluate(self, theta: float, s, order: int = 0):
        spline = CubicSpline(np.asarray(self.s_values), np.asarray(self.psi_values))
        return spline(s, order)


EntropyWeight = Union[PolynomialWeight, EnergyStar, ExpXi, TabulatedWeight]


def convex_on(psi: EntropyWeight, theta: float, lo: float, hi: float, samples: int = 257) -> bool:
    """psi'' >= 0 on [lo, hi], checked on a uniform grid."""
    s = np.linspace(lo, hi, samples)
    return bool(np.all(np.asarray(psi.evaluate(theta, s, 2)) >= -1e-12))


# --------------------------------------------------------------------------
# theta > 0 pairs


def weak_entropy_pair(
    theta: ThetaLike,
    state: ConservedState,
    psi: EntropyWeight,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> EntropyPairValue:
    """
    Weak entropy pair generated by psi.

    eta = rho <psi(u + (rho^theta/theta) tau)>_lam
    q   = rho <(u + rho^theta tau) psi(u + (rho^theta/theta) tau)>_lam

    with <.>_lam the probability average against (1 - tau^2)^lam.
    """
    th = _positive_theta(theta)
    if state.is_vacuum:
        return EntropyPairValue(0.0, 0.0)
    lam = weight_exponent(th)
    u = state.u
    c = state.rho ** th
    reach = c / th
    mode = quad.resolve(th)
    if isinstance(mode, AdaptiveOracle):
        eta_avg = oracle_average(lambda t: float(psi.evaluate(th, u + reach * t)), lam, 0.0, mode.tolerance)
        q_avg = oracle_average(
            lambda t: (u + c * t) * float(psi.evaluate(th, u + reach * t)), lam, 0.0, mode.tolerance
        )
        return EntropyPairValue(state.rho * eta_avg, state.rho * q_avg)
    rule = tilted_rule(lam, 0.0, quad, th)
    values = np.asarray(psi.evaluate(th, u + reach * rule.nodes), dtype=float)
    weights = rule.weights
    eta = state.rho * float(np.dot(weights, values))
    q = state.rho * float(np.dot(weights, (u + c * rule.nodes) * values))
    return EntropyPairValue(eta, q)


def energy_pair_from_kernel(
    theta: ThetaLike, state: ConservedState, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> EntropyPairValue:
    """Mechanical energy pair recovered from the kernel with psi*."""
    return weak_entropy_pair(theta, state, EnergyStar(), quad)


def second_moment_closed_form(theta: ThetaLike, state: ConservedState) -> float:
    """m^2/rho + rho^(2 theta + 1)/(theta (1 + 2 theta))."""
    th = _positive_theta(theta)
    if state.is_vacuum:
        return 0.0
    return state.m * state.u + state.rho ** (2.0 * th + 1.0) / (th * (1.0 + 2.0 * th))


def second_moment_identity(
    theta: ThetaLike,
    state: ConservedState,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    rtol: float = 1e-8,
) -> float:
    """
    int s^2 chi ds by quadrature, checked against the closed form.

    Raises QuadratureAccuracyError when the two disagree beyond rtol.
    """
    value = weak_entropy_pair(theta, state, PolynomialWeight((0.0, 0.0, 1.0)), quad).eta
    expected = second_moment_closed_form(theta, state)
    mismatch = abs(value - expected)
    if mismatch > rtol * max(1.0, abs(expected)):
        raise QuadratureAccuracyError("second moment disagrees with its closed form", mismatch, rtol)
    return value


def kinetic_pair_oracle(
    theta: ThetaLike,
    state: ConservedState,
    psi: EntropyWeight,
    tolerance: float = 1e-12,
) -> EntropyPairValue:
    """
    (eta, q) as s-integrals against the kernel:

        eta = int chi psi ds,  q = int (theta s + (1 - theta) u) chi psi ds

    computed by QUADPACK with the algebraic endpoint weight. Independent of
    the tau-rules; meant for moderate theta.
    """
    th = _positive_theta(theta)
    if state.is_vacuum:
        return EntropyPairValue(0.0, 0.0)
    lam = weight_exponent(th)
    u = state.u
    reach = state.rho ** th / th
    scale = math.exp(kernel_log_normalization(th))
    lo, hi = u - reach, u + reach
    eta = scale * oracle_interval_integral(lambda s: float(psi.evaluate(th, s)), lo, hi, lam, tolerance)
    q = scale * oracle_interval_integral(
        lambda s: (th * s + (1.0 - th) * u) * float(psi.evaluate(th, s)), lo, hi, lam, tolerance
    )
    return EntropyPairValue(eta, q)


# --------------------------------------------------------------------------
# xi-families


def isothermal_entropy_arrays(rho, m, xi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized eta_xi = rho^(1/(1 - xi^2)) e^(kappa u), q_xi = (u + xi) eta_xi."""
    xi = _check_xi(xi)
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    positive = rho > 0.0
    safe_rho = np.where(positive, rho, 1.0)
    u = np.where(positive, m / safe_rho, 0.0)
    eta = np.where(positive, np.exp(np.log(safe_rho) / (1.0 - xi * xi) + xi_slope(xi) * u), 0.0)
    return eta, (u + xi) * eta


def isothermal_entropy_xi(state: ConservedState, xi: float) -> EntropyPairValue:
    """Isothermal weak entropy pair of the exponential family; zero at vacuum."""
    eta, q = isothermal_entropy_arrays(np.array([state.rho]), np.array([state.m]), xi)
    return EntropyPairValue(float(eta[0]), float(q[0]))


def isothermal_family_pair(
    state: ConservedState,
    psi_over_xi: Callable[[float], float],
    support_bounds: Tuple[float, float],
    tolerance: float = 1e-10,
) -> EntropyPairValue:
    """
    Superposition int eta_xi psi(xi) dxi of the isothermal family.

    ``support_bounds`` must lie strictly inside (-1, 1); psi is assumed to
    vanish outside it. Only supports inside (-sqrt2 + 1, sqrt2 - 1) carry the
    limit entropy inequality.
    """
    a, b = support_bounds
    if not (-1.0 < a < b < 1.0):
        raise DomainError(f"support must lie strictly inside (-1, 1), got {support_bounds!r}")
    if state.is_vacuum:
        return EntropyPairValue(0.0, 0.0)
    eta, _ = integrate.quad(
        lambda x: isothermal_entropy_xi(state, x).eta * psi_over_xi(x), a, b, epsabs=tolerance, epsrel=tolerance, limit=200
    )
    q, _ = integrate.quad(
        lambda x: isothermal_entropy_xi(state, x).q * psi_over_xi(x), a, b, epsabs=tolerance, epsrel=tolerance, limit=200
    )
    return EntropyPairValue(eta, q)


def _log_masses(theta: float, tilts: np.ndarray, quad: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
    return log_tilted_masses(weight_exponent(theta), tilts, quad, theta)


def psi_xi_coefficient(theta: ThetaLike, xi: float, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Z(0)/Z(kappa/theta); at most 1."""
    th = _positive_theta(theta)
    kappa = xi_slope(_check_xi(xi))
    log_mass, _ = _log_masses(th, np.array([0.0, kappa / th]), quad)
    return float(math.exp(log_mass[0] - log_mass[1]))


def theta_entropy_arrays(
    theta: ThetaLike, rho, m, xi: float, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized theta-counterpart of the xi-family:

        eta = rho e^(kappa u) Z(kappa rho^theta/theta)/Z(kappa/theta)
        q   = eta (u + rho^theta <tau>_(kappa rho^theta/theta))

    Numerator and denominator are each evaluated as log masses.
    """
    th = _positive_theta(theta)
    kappa = xi_slope(_check_xi(xi))
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    positive = rho > 0.0
    safe_rho = np.where(positive, rho, 1.0)
    u = np.where(positive, m / safe_rho, 0.0)
    log_rho = np.log(safe_rho)
    c = np.exp(th * log_rho)
    log_num, mean = _log_masses(th, kappa * c / th, quad)
    log_den, _ = _log_masses(th, np.array([kappa / th]), quad)
    eta = np.where(positive, np.exp(log_rho + kappa * u + log_num - log_den[0]), 0.0)
    q = np.where(positive, eta * (u + c * mean), 0.0)
    return eta, q


def theta_entropy_xi(
    theta: ThetaLike, state: ConservedState, xi: float, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> EntropyPairValue:
    """Theta-counterpart of the xi-family at one state; zero at vacuum."""
    eta, q = theta_entropy_arrays(theta, np.array([state.rho]), np.array([state.m]), xi, quad)
    return EntropyPairValue(float(eta[0]), float(q[0]))


def xi_measure_moments(theta: ThetaLike, xi: float, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> Tuple[float, float]:
    """
    Mean and variance of the probability measure e^(kappa tau/theta)(1 - tau^2)^lam.

    The mean tends to xi and the variance is O(theta) as theta -> 0.
    """
    th = _positive_theta(theta)
    lam = weight_exponent(th)
    a = xi_slope(_check_xi(xi)) / th
    mode = quad.resolve(th)
    if isinstance(mode, AdaptiveOracle):
        mean = oracle_average(lambda t: t, lam, a, mode.tolerance)
        second = oracle_average(lambda t: t * t, lam, a, mode.tolerance)
    else:
        rule = tilted_rule(lam, a, quad, th)
        mean = rule.average(rule.nodes)
        second = rule.average(rule.nodes ** 2)
    return mean, max(second - mean * mean, 0.0)


def psi_xi_second_derivative(
    theta: ThetaLike, xi: float, s, quad: QuadratureSpec = DEFAULT_QUADRATURE
):
    """Second derivative of the theta-weight psi_xi at s."""
    return ExpXi(xi, quad).evaluate(theta_value(theta), s, 2)


def psi_xi_second_derivative_bound(xi: float, w0: BudgetLike) -> float:
    """xi^2/(1 - xi^2)^2 e^(|xi| w0/(1 - xi^2)): bound of psi_xi'' on [-w0, w0], uniform in theta."""
    kappa = xi_slope(_check_xi(xi))
    return kappa * kappa * math.exp(abs(kappa) * float(w0))


def _f_xi_prefactor(theta: float, state: ConservedState, xi: float) -> Tuple[float, float, float]:
    kappa = xi_slope(xi)
    log_rho = math.log(state.rho)
    s = float(scaled_density(theta, state.rho))
    return kappa, log_rho, s


def f_xi(theta: ThetaLike, state: ConservedState, xi: float, tau: float) -> float:
    """
    rho e^(kappa u) (e^(kappa S tau) - rho^(kappa xi)) with S the scaled density.

    Written as rho e^(kappa u + kappa xi ln rho) expm1(kappa (S tau - xi ln rho))
    so the value at tau = xi keeps its O(theta) size.
    """
    th = _positive_theta(theta)
    xi = _check_xi(xi, XI_LIMIT + 1e-15)
    if not -1.0 <= tau <= 1.0:
        raise DomainError(f"tau must lie in [-1, 1], got {tau!r}")
    if state.is_vacuum:
        return 0.0
    kappa, log_rho, s = _f_xi_prefactor(th, state, xi)
    scale = math.exp(log_rho + kappa * state.u + kappa * xi * log_rho)
    return scale * math.expm1(kappa * (s * tau - xi * log_rho))


def f_xi_arrays(theta: ThetaLike, rho, m, xi: float, tau: float) -> np.ndarray:
    """Vectorized f_xi over states; vacuum cells give 0."""
    th = _positive_theta(theta)
    xi = _check_xi(xi, XI_LIMIT + 1e-15)
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    positive = rho > 0.0
    safe_rho = np.where(positive, rho, 1.0)
    u = np.where(positive, m / safe_rho, 0.0)
    log_rho = np.log(safe_rho)
    kappa = xi_slope(xi)
    s = np.expm1(th * log_rho) / th
    scale = np.exp(log_rho + kappa * u + kappa * xi * log_rho)
    return np.where(positive, scale * np.expm1(kappa * (s * tau - xi * log_rho)), 0.0)


def f_xi_derivative(theta: ThetaLike, state: ConservedState, xi: float, tau: float) -> float:
    """d f_xi / d tau = rho e^(kappa u) kappa S e^(kappa S tau)."""
    th = _positive_theta(theta)
    xi = _check_xi(xi, XI_LIMIT + 1e-15)
    if state.is_vacuum:
        return 0.0
    kappa, log_rho, s = _f_xi_prefactor(th, state, xi)
    return kappa * s * math.exp(log_rho + kappa * state.u + kappa * s * tau)


# --------------------------------------------------------------------------
# gaps


def entropy_gap(
    theta: ThetaLike,
    state: ConservedState,
    xi: float,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    *,
    w0: BudgetLike,
    margin: float = 0.05,
) -> Tuple[float, float]:
    """
    (|eta_xi^theta - eta_xi|, |q_xi^theta - q_xi|) at one state.

    The O(sqrt(theta)) estimate needs the state inside the w0 budget and
    |xi| <= sqrt2 - 1 - margin; both are enforced.
    """
    th = _positive_theta(theta)
    if margin <= 0.0 or abs(xi) > XI_LIMIT - margin:
        raise PreconditionError(f"xi={xi!r} must satisfy |xi| <= sqrt2 - 1 - margin with margin > 0 (margin={margin!r})")
    if not invariant_budget(th, state, w0):
        raise PreconditionError(f"state {state!r} violates the invariant budget w0={float(w0)!r}")
    if state.is_vacuum:
        return 0.0, 0.0
    approx = theta_entropy_xi(th, state, xi, quad)
    limit = isothermal_entropy_xi(state, xi)
    return abs(approx.eta - limit.eta), abs(approx.q - limit.q)


def energy_gap(theta: ThetaLike, state: ConservedState, *, w0: Optional[BudgetLike] = None) -> Tuple[float, float]:
    """(|eta*^theta - eta*^0|, |q*^theta - q*^0|); checks the budget when w0 is given."""
    th = theta_value(theta)
    if w0 is not None and not invariant_budget(th, state, w0):
        raise PreconditionError(f"state {state!r} violates the invariant budget w0={float(w0)!r}")
    approx = mechanical_energy_pair(th, state)
    limit = mechanical_energy_pair(0.0, state)
    return abs(approx.eta - limit.eta), abs(approx.q - limit.q)


# --------------------------------------------------------------------------
# pair selectors


@dataclass(frozen=True)
class EnergyStarPair:
    """Mechanical energy pair."""

    @property
    def label(self) -> str:
        return "energy_star"

    def arrays(self, theta: float, rho, m) -> Tuple[np.ndarray, np.ndarray]:
        return mechanical_energy_arrays(theta, rho, m)


@dataclass(frozen=True)
class XiPair:
    """Xi-family: the isothermal pair at theta = 0, its theta-counterpart otherwise."""

    xi: float
    quad: QuadratureSpec = field(default=DEFAULT_QUADRATURE)

    @property
    def label(self) -> str:
        return f"xi={self.xi:g}"

    def arrays(self, theta: float, rho, m) -> Tuple[np.ndarray, np.ndarray]:
        if theta_value(theta) == 0.0:
            return isothermal_entropy_arrays(rho, m, self.xi)
        return theta_entropy_arrays(theta, rho, m, self.xi, self.quad)


@dataclass(frozen=True)
class PsiPair:
    """Pair generated by an entropy weight psi (theta > 0)."""

    psi: EntropyWeight
    quad: QuadratureSpec = field(default=DEFAULT_QUADRATURE)

    @property
    def label(self) -> str:
        return f"psi={type(self.psi).__name__}"

    def arrays(self, theta: float, rho, m) -> Tuple[np.ndarray, np.ndarray]:
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        m = np.atleast_1d(np.asarray(m, dtype=float))
        values = [weak_entropy_pair(theta, ConservedState(float(r), float(v) if r > 0.0 else 0.0), self.psi, self.quad)
                  for r, v in zip(rho, m)]
        return np.array([v.eta for v in values]), np.array([v.q for v in values])


@dataclass(frozen=True)
class AffinePair:
    """Trivial entropy alpha rho + beta m with flux alpha m + beta (m^2/rho + p)."""

    alpha: float
    beta: float

    @property
    def label(self) -> str:
        return f"affine({self.alpha:g},{self.beta:g})"

    def arrays(self, theta: float, rho, m) -> Tuple[np.ndarray, np.ndarray]:
        rho = np.asarray(rho, dtype=float)
        m = np.asarray(m, dtype=float)
        mass_flux, momentum_flux = flux_arrays(theta, rho, m)
        return self.alpha * rho + self.beta * m, self.alpha * mass_flux + self.beta * momentum_flux


PairSelector = Union[EnergyStarPair, XiPair, PsiPair, AffinePair]


def evaluate_pair(selector: PairSelector, theta: ThetaLike, state: ConservedState) -> EntropyPairValue:
    eta, q = selector.arrays(theta_value(theta), np.array([state.rho]), np.array([state.m]))
    return EntropyPairValue(float(np.asarray(eta).ravel()[0]), float(np.asarray(q).ravel()[0]))


def compatibility_residual(theta: ThetaLike, state: ConservedState, selector: PairSelector, h: float = 1e-4) -> float:
    """
    max |grad q - grad eta . dF| with gradients in (rho, m) by central differences.

    Expected to be O(h^2) plus quadrature noise for a genuine entropy pair.
    """
    th = theta_value(theta)
    if state.rho <= h:
        raise DomainError(f"density {state.rho!r} must exceed the step {h!r}")
    rho, m = state.rho, state.m
    points_rho = np.array([rho + h, rho - h, rho, rho])
    points_m = np.array([m, m, m + h, m - h])
    eta, q = selector.arrays(th, points_rho, points_m)
    eta = np.asarray(eta, dtype=float)
    q = np.asarray(q, dtype=float)
    grad_eta = np.array([eta[0] - eta[1], eta[2] - eta[3]]) / (2.0 * h)
    grad_q = np.array([q[0] - q[1], q[2] - q[3]]) / (2.0 * h)
    residual = grad_q - grad_eta @ flux_jacobian(th, state)
    return float(np.max(np.abs(residual)))
