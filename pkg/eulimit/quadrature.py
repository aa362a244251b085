"""
Quadrature for the tau-averages behind the weak entropy pairs.

Every entropy in this package reduces to integrals of the form

    Z(a) = int_{-1}^{1} e^(a tau) (1 - tau^2)^lam dtau,   lam = (1 - theta)/(2 theta),

and averages against the normalized measure e^(a tau)(1 - tau^2)^lam / Z(a).
For small theta lam is huge and the measure concentrates like a Gaussian
of width ~ sqrt(theta) around tau* = a/(lam + sqrt(lam^2 + a^2)), so rules
are kept in log form and one of three modes is used:

* JacobiWeight   - fixed-order Gauss-Jacobi nodes, tilt folded into the weights
* GaussianLimit  - composite Gauss-Legendre panels on a window about tau*
                   truncated where the log-weight has dropped by TRUNCATION_DROP
* AdaptiveOracle - QUADPACK with the algebraic endpoint weight, for tests
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.special import betaln, logsumexp

from eulimit.errors import DomainError, QuadratureAccuracyError, UnsupportedThetaError
from eulimit.rule_cache import get_rule_cache

logger = logging.getLogger(__name__)

JACOBI_THETA_THRESHOLD = 0.05
MIN_NODE_COUNT = 8
PANEL_NODES = 16
TRUNCATION_DROP = 80.0
MAX_PANELS = 512


@dataclass(frozen=True)
class JacobiWeight:
    pass


@dataclass(frozen=True)
class GaussianLimit:
    pass


@dataclass(frozen=True)
class AdaptiveOracle:
    tolerance: float = 1e-12

    def __post_init__(self):
        if not self.tolerance > 0.0:
            raise DomainError(f"oracle tolerance must be positive, got {self.tolerance!r}")


QuadratureMode = Union[JacobiWeight, GaussianLimit, AdaptiveOracle]


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Node count and mode; ``mode=None`` picks JacobiWeight for
    theta >= JACOBI_THETA_THRESHOLD and GaussianLimit below.
    """

    node_count: int = 64
    mode: Optional[QuadratureMode] = field(default=None)

    def __post_init__(self):
        if self.node_count < MIN_NODE_COUNT:
            raise DomainError(f"node_count must be at least {MIN_NODE_COUNT}, got {self.node_count}")

    def resolve(self, theta: float) -> QuadratureMode:
        if self.mode is not None:
            return self.mode
        return JacobiWeight() if theta >= JACOBI_THETA_THRESHOLD else GaussianLimit()


@dataclass(frozen=True)
class TauRule:
    """Nodes and normalized log-weights of a tilted measure plus its log mass."""

    nodes: np.ndarray
    log_weights: np.ndarray
    log_mass: float

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def average(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def weight_exponent(theta: float) -> float:
    """lam = (1 - theta)/(2 theta)."""
    if theta <= 0.0:
        raise UnsupportedThetaError("the tau-weight needs theta > 0")
    return (1.0 - theta) / (2.0 * theta)


def log_base_mass(lam: float) -> float:
    """log int_{-1}^{1} (1 - tau^2)^lam dtau = log B(1/2, lam + 1)."""
    return float(betaln(0.5, lam + 1.0))


def tilt_peak(lam: float, a: float) -> Tuple[float, float]:
    """Maximizer of a tau + lam log(1 - tau^2) and the local Gaussian width there."""
    peak = a / (lam + math.hypot(lam, a)) if a != 0.0 else 0.0
    width = (1.0 - peak * peak) / math.sqrt(2.0 * lam * (1.0 + peak * peak))
    return peak, width


def _jacobi_rule(lam: float, a: float, node_count: int) -> TauRule:
    n = node_count + int(abs(a))
    nodes, base_log_weights = get_rule_cache().get_rule(n, lam)
    tilted = base_log_weights + a * nodes
    log_norm = float(logsumexp(tilted))
    return TauRule(nodes, tilted - log_norm, log_base_mass(lam) + log_norm)


def _gaussian_limit_rule(lam: float, a: float, node_count: int) -> TauRule:
    peak, width = tilt_peak(lam, a)
    # |d^2/dtau^2 log-weight| >= 2 lam, so the drop is at least lam d^2 at distance d
    reach = math.sqrt(TRUNCATION_DROP / lam)
    lo = max(-1.0, peak - reach)
    hi = min(1.0, peak + reach)
    panels = max(node_count // PANEL_NODES, math.ceil((hi - lo) / (2.0 * width)))
    panels = min(panels, MAX_PANELS)
    gl_nodes, gl_weights = np.polynomial.legendre.leggauss(PANEL_NODES)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gl_nodes[None, :]).ravel()
    raw = np.log((half[:, None] * gl_weights[None, :]).ravel())
    one_minus = (1.0 - nodes) * (1.0 + nodes)
    keep = one_minus > 0.0
    nodes = nodes[keep]
    log_weights = raw[keep] + a * nodes + lam * np.log(one_minus[keep])
    log_mass = float(logsumexp(log_weights))
    return TauRule(nodes, log_weights - log_mass, log_mass)


def tilted_rule(lam: float, a: float, spec: QuadratureSpec, theta: Optional[float] = None) -> TauRule:
    """
    Discrete rule for the measure e^(a tau)(1 - tau^2)^lam on [-1, 1].

    ``theta`` selects the automatic mode; when omitted it is recovered from lam.
    """
    if theta is None:
        theta = 1.0 / (2.0 * lam + 1.0)
    mode = spec.resolve(theta)
    if isinstance(mode, AdaptiveOracle):
        raise DomainError("the adaptive oracle has no discrete rule; use oracle_average")
    if isinstance(mode, JacobiWeight):
        return _jacobi_rule(lam, a, spec.node_count)
    return _gaussian_limit_rule(lam, a, spec.node_count)


def _checked_quad(func: Callable[[float], float], lo: float, hi: float, lam: float, tolerance: float) -> float:
    result = integrate.quad(
        func, lo, hi, weight="alg", wvar=(lam, lam),
        epsabs=tolerance, epsrel=tolerance, limit=200, full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3 or abserr > tolerance * max(1.0, abs(value)):
        raise QuadratureAccuracyError("adaptive quadrature did not converge", abserr, tolerance)
    return value


def oracle_log_mass(lam: float, a: float, tolerance: float) -> float:
    """log Z(a) by adaptive quadrature."""
    shift = abs(a)
    mass = _checked_quad(lambda t: math.exp(a * t - shift), -1.0, 1.0, lam, tolerance)
    return shift + math.log(mass)


def oracle_average(
    g: Callable[[float], float], lam: float, a: float, tolerance: float
) -> float:
    """<g> against e^(a tau)(1 - tau^2)^lam, normalized, by adaptive quadrature."""
    shift = abs(a)
    mass = _checked_quad(lambda t: math.exp(a * t - shift), -1.0, 1.0, lam, tolerance)
    total = _checked_quad(lambda t: g(t) * math.exp(a * t - shift), -1.0, 1.0, lam, tolerance)
    return total / mass


def oracle_interval_integral(
    g: Callable[[float], float], lo: float, hi: float, lam: float, tolerance: float
) -> float:
    """int_lo^hi g(s) (s - lo)^lam (hi - s)^lam ds by adaptive quadrature."""
    return _checked_quad(g, lo, hi, lam, tolerance)


def log_tilted_masses(lam: float, tilts: np.ndarray, spec: QuadratureSpec, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    log Z(a) and <tau>_a for an array of tilts.

    Returns arrays (log_mass, mean). The Jacobi mode shares one node set
    for all tilts; the other modes are evaluated tilt by tilt.
    """
    tilts = np.asarray(tilts, dtype=float)
    flat = tilts.ravel()
    mode = spec.resolve(theta)
    if isinstance(mode, JacobiWeight) and flat.size:
        n = spec.node_count + int(np.max(np.abs(flat)))
        nodes, base = get_rule_cache().get_rule(n, lam)
        tilted = base[None, :] + flat[:, None] * nodes[None, :]
        log_norm = logsumexp(tilted, axis=1)
        mean = np.sum(np.exp(tilted - log_norm[:, None]) * nodes[None, :], axis=1)
        # the weight is even, so the untilted mean is exactly 0
        mean = np.where(flat == 0.0, 0.0, mean)
        return (log_base_mass(lam) + log_norm).reshape(tilts.shape), mean.reshape(tilts.shape)
    log_mass = np.empty_like(flat)
    mean = np.empty_like(flat)
    for k, a in enumerate(flat):
        if isinstance(mode, AdaptiveOracle):
            log_mass[k] = oracle_log_mass(lam, a, mode.tolerance)
            mean[k] = oracle_average(lambda t: t, lam, a, mode.tolerance)
        else:
            rule = tilted_rule(lam, a, spec, theta)
            log_mass[k] = rule.log_mass
            mean[k] = rule.average(rule.nodes)
        if a == 0.0:
            mean[k] = 0.0
    return log_mass.reshape(tilts.shape), mean.reshape(tilts.shape)
