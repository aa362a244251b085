from __future__ import annotations

import json
import math

import numpy as np
import pytest

from eulimit.errors import DomainError, InsufficientDataError, PreconditionError
from eulimit.gas_model import ConservedState, invariant_budget
from eulimit.godunov import Grid1D
from eulimit.limit_harness import (
    EDGE_OFFSET,
    SweepConfig,
    decavitation_experiment,
    dissipation_uniformity_sweep,
    energy_rate_sweep,
    entropy_rate_sweep,
    fit_rate,
    monotone_within,
    one_side_vacuum_experiment,
    riemann_limit_sweep,
    sample_budget_states,
)
from eulimit.riemann import RiemannData

THETAS = tuple(0.1 * 0.5 ** k for k in range(6))


def unit_density_sampler(theta, w0, count, rng):
    return np.ones(count), np.zeros(count)


def test_fit_rate_recovers_power_laws():
    fit = fit_rate((t, 2.0 * math.sqrt(t)) for t in THETAS)
    assert fit.slope == pytest.approx(0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(2.0), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert len(fit.points) == len(THETAS)

    linear = fit_rate((t, 3.0 * t) for t in THETAS)
    assert linear.slope == pytest.approx(1.0, abs=1e-12)
    assert linear.intercept == pytest.approx(math.log(3.0), abs=1e-12)


def test_fit_rate_tolerates_small_perturbations():
    thetas = [0.1 * 0.5 ** k for k in range(11)]
    points = [(t, math.sqrt(t) * math.exp(0.02 * math.sin(k))) for k, t in enumerate(thetas)]
    assert fit_rate(points).slope == pytest.approx(0.5, abs=0.02)


def test_fit_rate_drops_zeros_and_rejects_short_or_bad_input():
    fit = fit_rate([(0.1, 0.1), (0.05, 0.05), (0.025, 0.0), (0.0125, 0.0125), (0.00625, 0.00625)])
    assert fit.dropped == 1
    assert fit.slope == pytest.approx(1.0)
    with pytest.raises(InsufficientDataError):
        fit_rate([(0.1, 1.0), (0.05, 0.5), (0.025, 0.25)])
    with pytest.raises(DomainError):
        fit_rate([(0.1, -1.0), (0.05, 0.5), (0.025, 0.25), (0.01, 0.1)])


def test_monotone_within():
    assert monotone_within([1.0, 0.9, 0.92, 0.5])
    assert not monotone_within([1.0, 1.1])
    assert monotone_within([0.0, 0.0, 0.0])


def test_sweep_config_validation():
    with pytest.raises(DomainError):
        SweepConfig(thetas=(0.05, 0.1))
    with pytest.raises(DomainError):
        SweepConfig(thetas=(1.5, 0.1))
    with pytest.raises(DomainError):
        SweepConfig(xi_grid=(0.5,))
    with pytest.raises(DomainError):
        SweepConfig(workers=0)
    assert SweepConfig(thetas=[0.1, 0.01]).echo()["thetas"] == [0.1, 0.01]


@pytest.mark.parametrize("theta", [0.1, 1e-3])
def test_budget_sampler_covers_vacuum(theta):
    rng = np.random.default_rng(7)
    rho, m = sample_budget_states(theta, 2.0, 400, rng)
    assert rho.shape == m.shape == (400,)
    assert np.count_nonzero(rho == 0.0) >= 20
    assert np.count_nonzero((rho >= 1e-6) & (rho <= 1e-3)) >= 40
    assert np.all(m[rho == 0.0] == 0.0)
    for r, v in zip(rho, m):
        assert invariant_budget(theta, ConservedState(float(r), float(v)), 2.0, slack=1e-12)


def test_entropy_sweep_unit_density_is_flat_zero():
    config = SweepConfig(thetas=THETAS, sample_count=20, xi_grid=(0.0,), sampler=unit_density_sampler)
    report = entropy_rate_sweep(config)
    assert report.fits == {"entropy_gap": None, "f_xi": None}
    assert (report.table[["sup_gap_eta", "sup_gap_q", "sup_f_xi"]] == 0.0).all().all()
    assert report.passed
    summary = report.summary()
    assert all(fit.flat_zero for fit in summary.fits)


def test_energy_sweep_unit_density_is_flat_zero():
    report = energy_rate_sweep(SweepConfig(thetas=THETAS, sample_count=10, sampler=unit_density_sampler))
    assert report.fits == {"energy_gap": None}
    assert report.extras["sup_gap"] == [0.0] * len(THETAS)


def test_sampler_outside_budget_is_a_bug():
    def dense(theta, w0, count, rng):
        return np.full(count, 1e6), np.zeros(count)

    with pytest.raises(AssertionError):
        energy_rate_sweep(SweepConfig(thetas=THETAS, sample_count=5, sampler=dense))


def test_entropy_sweep_needs_margin_from_admissible_bound():
    with pytest.raises(PreconditionError):
        entropy_rate_sweep(SweepConfig(thetas=THETAS, sample_count=5, xi_grid=(0.38,)))


def test_energy_sweep_rate():
    report = energy_rate_sweep(SweepConfig(thetas=tuple(0.1 * 0.5 ** k for k in range(11)), sample_count=400))
    fit = report.fits["energy_gap"]
    assert 0.9 <= fit.slope <= 1.1
    assert fit.r_squared >= 0.98
    assert list(report.table["theta"]) == list(0.1 * 0.5 ** k for k in range(11))


def test_sweeps_are_deterministic_across_workers(tmp_path):
    config = dict(thetas=(0.1, 0.05, 0.025, 0.0125), sample_count=40, seed=11, xi_grid=(-0.2, 0.2))
    serial = entropy_rate_sweep(SweepConfig(workers=1, **config))
    pooled = entropy_rate_sweep(SweepConfig(workers=3, **config))
    csv_a, _ = serial.write(tmp_path / "a")
    csv_b, _ = pooled.write(tmp_path / "b")
    assert csv_a.read_bytes() == csv_b.read_bytes()


def test_decavitation_experiment(tmp_path):
    config = SweepConfig(thetas=(0.9, 0.7, 0.3, 0.1, 0.01))
    report = decavitation_experiment(1.0, 0.0, 1.0, 4.0, config)
    assert report.extras["theta_star"] == pytest.approx(0.5, abs=1e-10)
    assert report.trailer == ("theta_star=0.5",)
    assert report.passed
    assert report.table["theta"].iloc[-1] == 0.0
    assert report.table["rho_mid"].iloc[-1] == pytest.approx(math.exp(-2.0))
    csv_path, json_path = report.write(tmp_path)
    assert csv_path.read_text().splitlines()[-1] == "theta_star=0.5"
    assert json.loads(json_path.read_text())["pass"] is True


def test_decavitation_without_threshold():
    report = decavitation_experiment(1.0, 0.0, 1.0, 1.0, SweepConfig(thetas=(0.9, 0.5, 0.1)))
    assert report.extras["theta_star"] is None
    assert report.trailer == ("theta_star=none",)
    assert not report.table["is_vacuum"].any()
    with pytest.raises(DomainError):
        decavitation_experiment(1.0, 1.0, 1.0, 0.0, SweepConfig(thetas=(0.5,)))


def test_one_side_vacuum_experiment():
    thetas = (0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001)
    report = one_side_vacuum_experiment(2.0, 0.0, SweepConfig(thetas=thetas))
    flags = report.pass_flags
    assert flags["vacuum_edge_diverges"]
    assert flags["fan_edge_bound"]
    assert flags["approx_budget"]
    l1 = report.table["l1_vacuum"].tolist()
    assert all(b < a for a, b in zip(l1, l1[1:]))
    assert l1[-1] <= 0.05 * l1[0]
    assert report.table["l1_approx"].iloc[-1] <= 0.05 * report.table["l1_approx"].iloc[0]
    assert report.table["vacuum_edge"].iloc[-1] < -900.0
    assert flags["edge_sound_speed_vanishes"]
    assert flags["isothermal_sound_speed_one"]
    with pytest.raises(DomainError):
        one_side_vacuum_experiment(0.0, 0.0, SweepConfig(thetas=thetas))


@pytest.mark.parametrize("rho_r,u_r", [(2.0, 0.0), (50.0, 3.0)])
def test_one_side_vacuum_edge_sound_speed(rho_r, u_r):
    thetas = (0.5, 0.1, 0.01, 0.001)
    report = one_side_vacuum_experiment(rho_r, u_r, SweepConfig(thetas=thetas), window=(1.0, -3.0, 3.0, 50))
    speeds = report.table["edge_sound_speed"].tolist()
    # inside a 2-fan rho^theta = theta (xi - vacuum edge)/(theta + 1)
    expected = [t * EDGE_OFFSET / (t + 1.0) for t in thetas]
    assert speeds == pytest.approx(expected, rel=1e-8)
    assert all(b < a for a, b in zip(speeds, speeds[1:]))
    assert report.table["edge_sound_speed_isothermal"].tolist() == [1.0] * len(thetas)
    assert report.pass_flags["edge_sound_speed_vanishes"]
    assert report.pass_flags["isothermal_sound_speed_one"]


def test_riemann_limit_of_equal_states_is_zero():
    data = RiemannData.from_values(0.1, 1.0, 0.0, 1.0, 0.0)
    report = riemann_limit_sweep(data, (1.0, -3.0, 3.0, 100), SweepConfig(thetas=(0.1, 0.01, 0.001)))
    assert report.table["l1_rho"].tolist() == pytest.approx([0.0] * 3, abs=1e-12)
    assert report.table["l1_m"].tolist() == pytest.approx([0.0] * 3, abs=1e-12)
    assert report.fits == {}


def test_riemann_limit_converges():
    data = RiemannData.from_values(0.1, 1.0, 0.5, 1.0, -0.5)
    thetas = tuple(0.1 * 0.5 ** k for k in range(5))
    report = riemann_limit_sweep(data, (1.0, -3.0, 3.0, 400), SweepConfig(thetas=thetas))
    distance = report.extras["distance"]
    assert all(b < a for a, b in zip(distance, distance[1:]))
    assert report.fits["l1_distance"].slope > 0.5
    assert report.extras["limit_pattern"] == "II"
    with pytest.raises(DomainError):
        riemann_limit_sweep(RiemannData.from_values(0.1, "vacuum", 0.0, 1.0, 0.0), (1.0, -1.0, 1.0, 10), SweepConfig())


@pytest.mark.parametrize(
    "left,right",
    [((1.0, 0.5), (1.0, -0.5)), ((1.0, 0.0), (2.0, 0.3))],
    ids=["two-shock", "shock-rarefaction"],
)
def test_riemann_limit_distance_drops_two_orders(left, right):
    data = RiemannData.from_values(0.1, *left, *right)
    report = riemann_limit_sweep(data, (1.0, -3.0, 3.0, 400), SweepConfig(thetas=(1e-1, 1e-2, 1e-3, 1e-4)))
    distance = report.extras["distance"]
    assert distance[0] > 0.0
    assert distance[-1] <= 0.01 * distance[0]
    assert report.pass_flags["riemann_decay"]


def test_riemann_limit_pattern_across_decavitation():
    data = RiemannData.from_values(0.9, 1.0, 0.0, 1.0, 4.0)
    thetas = (0.9, 0.7, 0.6, 0.4, 0.3, 0.1)
    report = riemann_limit_sweep(data, (1.0, -3.0, 3.0, 200), SweepConfig(thetas=thetas))
    assert report.table["pattern"].tolist() == ["IV2", "IV2", "IV2", "IV1", "IV1", "IV1"]
    distance = report.extras["distance"]
    assert all(math.isfinite(d) for d in distance)
    assert distance[-1] < distance[3]


def test_dissipation_sweep_rows():
    data = RiemannData.from_values(0.4, 1.0, 1.0, 1.0, -1.0)
    grid = Grid1D(-2.0, 2.0, 100)
    config = SweepConfig(thetas=(0.4, 0.2, 0.1, 0.05))
    report = dissipation_uniformity_sweep(data, grid, ((0.15, 0.35), (-0.5, 0.5)), config, t_end=0.5)
    assert list(report.table["theta"]) == [0.4, 0.2, 0.1, 0.05]
    assert (report.table["tv_estimate"] > 0.0).all()
    assert (report.table["grid_floor"] > 0.0).all()
    assert report.config_echo["n_cells"] == 100
    assert report.config_echo["compact_set"] == [[0.15, 0.35], [-0.5, 0.5]]


@pytest.mark.slow
def test_default_entropy_sweep_rates():
    report = entropy_rate_sweep(SweepConfig())
    assert report.pass_flags["gap_rate"]
    assert report.pass_flags["f_xi_rate"]
