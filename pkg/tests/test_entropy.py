from __future__ import annotations

import math

import numpy as np
import pytest

from eulimit.entropy import (
    XI_LIMIT,
    AffinePair,
    EnergyStar,
    EnergyStarPair,
    ExpXi,
    KernelPoint,
    PolynomialWeight,
    PsiPair,
    TabulatedWeight,
    XiPair,
    compatibility_residual,
    convex_on,
    energy_gap,
    energy_pair_from_kernel,
    entropy_gap,
    evaluate_pair,
    f_xi,
    f_xi_arrays,
    f_xi_derivative,
    isothermal_entropy_xi,
    isothermal_family_pair,
    kernel_chi,
    kernel_chi_values,
    kinetic_pair_oracle,
    psi_xi_coefficient,
    psi_xi_second_derivative,
    psi_xi_second_derivative_bound,
    second_moment_closed_form,
    second_moment_identity,
    theta_entropy_xi,
    weak_entropy_pair,
    xi_measure_moments,
)
from eulimit.errors import DomainError, PreconditionError, UnsupportedThetaError
from eulimit.gas_model import ConservedState, mechanical_energy_pair, pressure

STATES = [
    ConservedState.from_velocity(0.5, -1.0),
    ConservedState.from_velocity(1.0, 0.0),
    ConservedState.from_velocity(2.0, 0.7),
]


def random_states(count: int, seed: int):
    rng = np.random.default_rng(seed)
    return [ConservedState.from_velocity(rng.uniform(0.5, 2.5), rng.uniform(-0.5, 0.5)) for _ in range(count)]


def test_kernel_support_and_vacuum():
    assert kernel_chi(KernelPoint(0.5, 1.0, 0.0, 3.0)) == 0.0
    assert kernel_chi(KernelPoint(0.5, 1.0, 0.0, 1.0)) > 0.0
    assert kernel_chi(KernelPoint(0.5, 0.0, 0.0, 0.0)) == 0.0
    assert np.all(kernel_chi_values(0.3, 2.0, 0.5, np.linspace(-20.0, 20.0, 101)) >= 0.0)
    with pytest.raises(UnsupportedThetaError):
        kernel_chi(KernelPoint(0.0, 1.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        KernelPoint(0.5, -1.0, 0.0, 0.0)


@pytest.mark.parametrize("theta", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("state", STATES)
def test_kernel_moments_by_oracle(theta, state):
    zeroth = kinetic_pair_oracle(theta, state, PolynomialWeight((1.0,)))
    first = kinetic_pair_oracle(theta, state, PolynomialWeight((0.0, 1.0)))
    assert zeroth.eta == pytest.approx(state.rho, rel=1e-10)
    assert zeroth.q == pytest.approx(state.m, rel=1e-10, abs=1e-10)
    assert first.eta == pytest.approx(state.m, rel=1e-10, abs=1e-10)
    assert first.q == pytest.approx(state.m * state.u + pressure(theta, state.rho), rel=1e-10)


@pytest.mark.parametrize("theta", [1e-3, 0.01, 0.1, 0.5, 0.9])
def test_weak_pair_trivial_weights(theta):
    for state in STATES:
        ones = weak_entropy_pair(theta, state, PolynomialWeight((1.0,)))
        linear = weak_entropy_pair(theta, state, PolynomialWeight((0.0, 1.0)))
        assert ones.eta == pytest.approx(state.rho, rel=1e-12)
        assert ones.q == pytest.approx(state.m, rel=1e-10, abs=1e-12)
        assert linear.eta == pytest.approx(state.m, rel=1e-10, abs=1e-12)
        assert linear.q == pytest.approx(state.m * state.u + pressure(theta, state.rho), rel=1e-10)


@pytest.mark.parametrize("theta", [1e-3, 0.01, 0.1, 0.5, 0.9])
@pytest.mark.parametrize("rho", [1e-3, 0.5, 3.0, math.exp(2.0)])
@pytest.mark.parametrize("u", [-2.0, 0.0, 1.5])
def test_energy_star_weight_generates_mechanical_energy(theta, rho, u):
    state = ConservedState.from_velocity(rho, u)
    pair = weak_entropy_pair(theta, state, EnergyStar())
    expected = mechanical_energy_pair(theta, state)
    assert pair.eta == pytest.approx(expected.eta, rel=1e-8, abs=1e-8)
    assert pair.q == pytest.approx(expected.q, rel=1e-8, abs=1e-8)
    assert energy_pair_from_kernel(theta, state) == pair


def test_weak_pair_vacuum_and_isothermal():
    assert weak_entropy_pair(0.5, ConservedState.vacuum(), EnergyStar()) == (0.0, 0.0)
    with pytest.raises(UnsupportedThetaError):
        weak_entropy_pair(0.0, STATES[0], EnergyStar())


def test_kinetic_oracle_cross_checks_tau_rules():
    state = ConservedState.from_velocity(1.5, -0.4)
    for psi in (EnergyStar(), ExpXi(0.3), PolynomialWeight((0.5, -1.0, 0.0, 0.25))):
        rule = weak_entropy_pair(0.4, state, psi)
        oracle = kinetic_pair_oracle(0.4, state, psi)
        assert rule.eta == pytest.approx(oracle.eta, rel=1e-9, abs=1e-10)
        assert rule.q == pytest.approx(oracle.q, rel=1e-9, abs=1e-10)


def test_second_moment():
    assert second_moment_identity(0.5, ConservedState(1.0, 0.0)) == pytest.approx(1.0)
    assert second_moment_identity(0.5, ConservedState.vacuum()) == 0.0
    rng = np.random.default_rng(3)
    for _ in range(10):
        theta = rng.uniform(0.05, 0.9)
        state = ConservedState.from_velocity(rng.uniform(0.1, 5.0), rng.uniform(-2.0, 2.0))
        oracle = kinetic_pair_oracle(theta, state, PolynomialWeight((0.0, 0.0, 1.0)))
        assert oracle.eta == pytest.approx(second_moment_closed_form(theta, state), rel=1e-9)
        assert second_moment_identity(theta, state) == pytest.approx(oracle.eta, rel=1e-9)


def test_weights_and_convexity():
    assert convex_on(EnergyStar(), 0.5, -3.0, 3.0)
    assert not convex_on(PolynomialWeight((0.0, 0.0, -1.0)), 0.5, -1.0, 1.0)
    s = np.linspace(-2.0, 2.0, 9)
    table = TabulatedWeight(tuple(s), tuple(s**2))
    assert table.evaluate(0.5, 0.5) == pytest.approx(0.25)
    assert table.evaluate(0.5, 0.3, 2) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        TabulatedWeight((0.0, 1.0), (0.0, 1.0))
    with pytest.raises(DomainError):
        ExpXi(1.0)


def test_isothermal_xi_family():
    state = ConservedState(2.0, -0.6)
    assert isothermal_entropy_xi(state, 0.0) == pytest.approx((2.0, -0.6))
    assert isothermal_entropy_xi(ConservedState(1.0, 0.0), 0.5) == pytest.approx((1.0, 0.5))
    assert isothermal_entropy_xi(ConservedState.vacuum(), 0.3) == (0.0, 0.0)
    with pytest.raises(DomainError):
        isothermal_entropy_xi(state, 1.0)


def test_isothermal_family_superposition():
    state = ConservedState.from_velocity(1.7, 0.4)
    assert isothermal_family_pair(ConservedState.vacuum(), lambda x: 1.0, (-0.3, 0.3)) == (0.0, 0.0)
    assert isothermal_family_pair(state, lambda x: 1.0 + x, (-0.3, 0.3)).eta >= 0.0
    with pytest.raises(DomainError):
        isothermal_family_pair(state, lambda x: 1.0, (-1.0, 0.3))

    center = 0.2
    for width in (1e-2, 1e-3):
        def bump(x, width=width):
            z = (x - center) / width
            return 15.0 / (16.0 * width) * (1.0 - z * z) ** 2

        pair = isothermal_family_pair(state, bump, (center - width, center + width))
        exact = isothermal_entropy_xi(state, center)
        assert pair.eta == pytest.approx(exact.eta, rel=10 * width**2)
        assert pair.q == pytest.approx(exact.q, rel=10 * width**2)


def test_theta_family_reduces_at_xi_zero():
    state = ConservedState(2.0, -0.6)
    for theta in (0.5, 0.01):
        pair = theta_entropy_xi(theta, state, 0.0)
        assert pair.eta == pytest.approx(2.0, rel=1e-12)
        assert pair.q == pytest.approx(-0.6, rel=1e-9)
    assert theta_entropy_xi(0.5, ConservedState.vacuum(), 0.3) == (0.0, 0.0)


def test_theta_family_matches_kinetic_oracle():
    state = ConservedState.from_velocity(1.3, 0.25)
    pair = theta_entropy_xi(0.5, state, 0.3)
    oracle = kinetic_pair_oracle(0.5, state, ExpXi(0.3))
    assert pair.eta == pytest.approx(oracle.eta, rel=1e-9)
    assert pair.q == pytest.approx(oracle.q, rel=1e-9)


def test_xi_measure_concentrates():
    xi = 0.3
    previous = math.inf
    for theta in (1e-1, 1e-2, 1e-3):
        mean, variance = xi_measure_moments(theta, xi)
        assert abs(mean - xi) <= 10.0 * theta
        assert variance <= theta
        assert variance < previous
        previous = variance


def test_psi_xi_second_derivative_is_bounded():
    w0 = 2.0
    s = np.linspace(-w0, w0, 41)
    for xi in (-0.3, 0.3):
        bound = psi_xi_second_derivative_bound(xi, w0)
        for theta in (0.5, 0.1, 0.01):
            assert psi_xi_coefficient(theta, xi) <= 1.0 + 1e-12
            assert np.all(psi_xi_second_derivative(theta, xi, s) <= bound * (1.0 + 1e-12))


def test_f_xi_trivial_cases():
    assert f_xi(0.1, ConservedState(1.0, 0.3), 0.2, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert f_xi(0.1, ConservedState(2.0, 0.3), 0.0, 0.5) == 0.0
    assert f_xi(0.1, ConservedState.vacuum(), 0.2, 0.5) == 0.0
    with pytest.raises(DomainError):
        f_xi(0.1, ConservedState(2.0, 0.3), 0.2, 1.5)


def test_f_xi_decays_linearly_in_theta():
    state = ConservedState.from_velocity(2.0, 0.3)
    xi = 0.2
    values = [abs(f_xi(theta, state, xi, xi)) for theta in (1e-1, 1e-2, 1e-3)]
    for big, small in zip(values, values[1:]):
        assert 8.0 <= big / small <= 12.0


def test_f_xi_arrays_and_derivative():
    rho = np.array([0.0, 0.4, 1.0, 2.5])
    m = np.array([0.0, -0.2, 0.1, 1.0])
    theta, xi, tau = 0.05, -0.25, 0.4
    values = f_xi_arrays(theta, rho, m, xi, tau)
    for i in range(rho.size):
        assert values[i] == pytest.approx(f_xi(theta, ConservedState(rho[i], m[i]), xi, tau), rel=1e-12, abs=1e-15)
    state = ConservedState(2.5, 1.0)
    h = 1e-5
    numeric = (f_xi(theta, state, xi, tau + h) - f_xi(theta, state, xi, tau - h)) / (2 * h)
    assert f_xi_derivative(theta, state, xi, tau) == pytest.approx(numeric, rel=1e-6)


def test_entropy_gap_preconditions_and_trivial_values():
    assert entropy_gap(0.01, ConservedState(1.0, 0.0), 0.0, w0=2.0) == pytest.approx((0.0, 0.0), abs=1e-12)
    assert entropy_gap(0.01, ConservedState.vacuum(), 0.2, w0=2.0) == (0.0, 0.0)
    with pytest.raises(PreconditionError):
        entropy_gap(0.01, ConservedState(1.0, 0.0), XI_LIMIT - 0.01, w0=2.0)
    with pytest.raises(PreconditionError):
        entropy_gap(0.01, ConservedState.from_velocity(1.0, 3.0), 0.1, w0=2.0)


def test_entropy_gap_shrinks_with_theta():
    state = ConservedState.from_velocity(3.0, 0.5)
    coarse = max(entropy_gap(1e-1, state, 0.3, w0=2.0))
    fine = max(entropy_gap(1e-3, state, 0.3, w0=2.0))
    assert fine < coarse / 5.0


def test_energy_gap():
    assert energy_gap(0.1, ConservedState(1.0, 0.0)) == pytest.approx((0.0, 0.0))
    assert energy_gap(0.1, ConservedState.vacuum()) == (0.0, 0.0)
    state = ConservedState.from_velocity(2.0, 0.5)
    assert max(energy_gap(1e-3, state)) < max(energy_gap(1e-1, state)) / 50.0
    with pytest.raises(PreconditionError):
        energy_gap(0.1, ConservedState.from_velocity(1.0, 3.0), w0=2.0)


@pytest.mark.parametrize("xi", [-0.4, 0.0, 0.2, 0.4])
def test_compatibility_isothermal_xi_family(xi):
    for state in random_states(20, seed=11):
        assert compatibility_residual(0.0, state, XiPair(xi)) <= 1e-6


@pytest.mark.parametrize("xi", [-0.3, 0.3])
def test_compatibility_theta_xi_family(xi):
    for state in random_states(20, seed=12):
        assert compatibility_residual(0.5, state, XiPair(xi)) <= 1e-6


def test_compatibility_energy_star():
    for state in random_states(20, seed=13):
        assert compatibility_residual(0.5, state, EnergyStarPair()) <= 1e-6
        assert compatibility_residual(0.5, state, PsiPair(EnergyStar())) <= 1e-6


def test_compatibility_affine_pair_is_exact():
    for state in random_states(10, seed=14):
        assert compatibility_residual(0.3, state, AffinePair(0.7, -1.2), h=1e-6) <= 1e-8


def test_evaluate_pair_selectors():
    state = ConservedState(2.0, 0.4)
    assert evaluate_pair(EnergyStarPair(), 0.5, state) == pytest.approx(mechanical_energy_pair(0.5, state))
    assert evaluate_pair(XiPair(0.2), 0.0, state) == pytest.approx(isothermal_entropy_xi(state, 0.2))
    assert evaluate_pair(AffinePair(1.0, 0.0), 0.5, state) == pytest.approx((2.0, 0.4))
    assert XiPair(0.3).label == "xi=0.3"
