from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest

from eulimit.entropy import EnergyStarPair, XiPair
from eulimit.errors import DomainError, SchemeFailureError
from eulimit.gas_model import ConservedState, ThetaParam, flux
from eulimit.godunov import (
    Boundary,
    FieldSnapshot,
    Grid1D,
    PlateauCutoff,
    QuinticBump,
    SimConfig,
    ZeroTest,
    conservation_residual,
    dissipation_tv_estimate,
    entropy_residual,
    interface_flux,
    invariant_audit,
    l1_distance_to_exact,
    max_wave_speed,
    riemann_initial,
    run,
    step,
    write_snapshot_csv,
)
from eulimit.riemann import RiemannData


def collision_run(theta: float = 0.5, n_cells: int = 200):
    grid = Grid1D(-3.0, 3.0, n_cells)
    config = SimConfig(ThetaParam(theta), grid, t_end=1.0)
    initial = riemann_initial(grid, RiemannData.from_values(theta, 1.0, 1.0, 1.0, -1.0))
    return run(config, initial, keep_levels=True)


@pytest.fixture(scope="module")
def collision():
    return collision_run()


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("state", [ConservedState(1.0, 0.0), ConservedState(2.5, -1.5), ConservedState(0.2, 0.5)])
def test_interface_flux_is_consistent(theta, state):
    assert interface_flux(theta, state, state) == pytest.approx(flux(theta, state), rel=1e-10, abs=1e-12)


def test_interface_flux_vacuum():
    vacuum = ConservedState.vacuum()
    assert interface_flux(0.5, vacuum, vacuum) == (0.0, 0.0)
    mass, momentum = interface_flux(0.5, ConservedState(1.0, 0.0), vacuum)
    assert mass > 0.0 and momentum > 0.0


def test_grid_and_config_validation():
    with pytest.raises(DomainError):
        Grid1D(1.0, 0.0, 10)
    with pytest.raises(DomainError):
        Grid1D(0.0, 1.0, 3)
    grid = Grid1D(0.0, 1.0, 10, boundary="periodic")
    assert grid.boundary is Boundary.PERIODIC
    assert grid.dx == pytest.approx(0.1)
    assert grid.centers[0] == pytest.approx(0.05)
    with pytest.raises(DomainError):
        SimConfig(ThetaParam(0.5), grid, t_end=1.0, cfl=0.95)
    with pytest.raises(DomainError):
        SimConfig(ThetaParam(0.5), grid, t_end=0.0)
    with pytest.raises(DomainError):
        SimConfig(ThetaParam(0.5), grid, t_end=1.0, snapshot_times=(0.5, 0.2))
    with pytest.raises(DomainError):
        FieldSnapshot(0.0, np.array([1.0, -0.1]), np.zeros(2))


def test_riemann_initial_averages_the_jump_cell():
    data = RiemannData.from_values(0.5, 2.0, 1.0, 1.0, 0.0)
    even = riemann_initial(Grid1D(-1.0, 1.0, 4), data)
    np.testing.assert_allclose(even.rho, [2.0, 2.0, 1.0, 1.0])
    np.testing.assert_allclose(even.m, [2.0, 2.0, 0.0, 0.0])
    odd = riemann_initial(Grid1D(-1.0, 1.0, 5), data)
    assert odd.rho[2] == pytest.approx(1.5)
    assert odd.m[2] == pytest.approx(1.0)


def test_max_wave_speed_sees_vacuum_fans():
    grid = Grid1D(0.0, 1.0, 4)
    rho = np.array([0.0, 0.0, 1.0, 1.0])
    m = np.zeros(4)
    assert max_wave_speed(0.5, grid, rho, m) == pytest.approx(2.0)
    assert max_wave_speed(0.0, grid, rho, m) == pytest.approx(1.0)
    assert max_wave_speed(0.5, grid, np.zeros(4), m) == 0.0


def test_uniform_state_is_stationary():
    grid = Grid1D(-1.0, 1.0, 50)
    config = SimConfig(ThetaParam(0.3), grid, t_end=0.5)
    initial = FieldSnapshot(0.0, np.full(50, 1.3), np.full(50, 0.4))
    result = run(config, initial)
    np.testing.assert_allclose(result.final.rho, 1.3, rtol=0, atol=1e-12)
    np.testing.assert_allclose(result.final.m, 0.4, rtol=0, atol=1e-12)
    assert result.final.time == 0.5


@pytest.mark.parametrize("theta", [0.0, 0.5])
def test_periodic_run_conserves_mass_and_momentum(theta):
    grid = Grid1D(0.0, 1.0, 128, boundary=Boundary.PERIODIC)
    x = grid.centers
    initial = FieldSnapshot(0.0, 1.0 + 0.3 * np.sin(2.0 * math.pi * x), 0.2 * np.cos(2.0 * math.pi * x))
    result = run(SimConfig(ThetaParam(theta), grid, t_end=0.4), initial)
    mass0, momentum0 = initial.totals(grid.dx)
    mass1, momentum1 = result.final.totals(grid.dx)
    assert mass1 == pytest.approx(mass0, rel=1e-12)
    assert momentum1 == pytest.approx(momentum0, abs=1e-12)


def test_run_lands_on_snapshot_times():
    grid = Grid1D(-1.0, 1.0, 40)
    config = SimConfig(ThetaParam(0.5), grid, t_end=0.5, snapshot_times=(0.1, 0.25))
    result = run(config, riemann_initial(grid, RiemannData.from_values(0.5, 1.0, 0.0, 0.5, 0.0)))
    assert [s.time for s in result.snapshots] == [0.0, 0.1, 0.25, 0.5]
    assert len(result.max_speeds) > 0
    assert result.levels == []


def test_step_rejects_bad_time_step():
    grid = Grid1D(-1.0, 1.0, 10)
    config = SimConfig(ThetaParam(0.5), grid, t_end=1.0)
    snapshot = FieldSnapshot(0.0, np.ones(10), np.zeros(10))
    with pytest.raises(SchemeFailureError):
        step(config, snapshot, dt=-1.0)


def test_run_rejects_mismatched_initial_data():
    config = SimConfig(ThetaParam(0.5), Grid1D(-1.0, 1.0, 10), t_end=1.0)
    with pytest.raises(DomainError):
        run(config, FieldSnapshot(0.0, np.ones(12), np.zeros(12)))


def test_vacuum_opening_keeps_density_nonnegative():
    grid = Grid1D(-2.0, 2.0, 200)
    config = SimConfig(ThetaParam(0.9), grid, t_end=0.4)
    result = run(config, riemann_initial(grid, RiemannData.from_values(0.9, 1.0, -1.5, 1.0, 1.5)))
    assert np.all(result.final.rho >= 0.0)
    center = result.final.rho[np.abs(grid.centers) < 0.1]
    assert np.max(center) < 0.5


def test_invariant_audit_passes_on_dam_break():
    theta = 0.5
    grid = Grid1D(-1.0, 1.0, 200)
    config = SimConfig(ThetaParam(theta), grid, t_end=0.5, snapshot_times=(0.1, 0.2, 0.3, 0.4))
    result = run(config, riemann_initial(grid, RiemannData.from_values(theta, 1.0, 0.0, 0.5, 0.0)))
    report = invariant_audit(theta, result.snapshots, 1.0)
    assert report.passed
    assert report.budget_excess <= 1e-8


def test_invariant_audit_flags_violations():
    snapshot = FieldSnapshot(0.0, np.array([1.0, 20.0]), np.array([0.0, 0.0]))
    report = invariant_audit(0.5, [snapshot], 1.0)
    assert not report.passed
    assert report.density_excess == pytest.approx(20.0 - math.e)
    assert report.worst_time == 0.0


def test_conservation_residual_vanishes(collision):
    bump = QuinticBump(0.5, 0.4, 0.0, 1.5)
    mass, momentum = conservation_residual(0.5, collision, bump)
    assert abs(mass) <= 1e-10
    assert abs(momentum) <= 1e-10


@pytest.mark.parametrize("selector", [EnergyStarPair(), XiPair(-0.3), XiPair(0.0), XiPair(0.3)])
def test_entropy_residual_sign_across_shocks(collision, selector):
    bump = QuinticBump(0.5, 0.4, 0.0, 1.5)
    report = entropy_residual(0.5, collision, selector, bump)
    assert report.sign_ok
    assert report.grid_floor > 0.0
    assert report.compact_set == bump.support
    if isinstance(selector, EnergyStarPair):
        assert report.residual_value > 0.0


def test_zero_test_function(collision):
    report = entropy_residual(0.5, collision, EnergyStarPair(), ZeroTest())
    assert report.residual_value == 0.0
    assert conservation_residual(0.5, collision, ZeroTest()) == (0.0, 0.0)


def test_support_must_be_compact(collision):
    with pytest.raises(DomainError):
        entropy_residual(0.5, collision, EnergyStarPair(), QuinticBump(0.5, 0.4, 2.0, 1.5))
    with pytest.raises(DomainError):
        entropy_residual(0.5, collision, EnergyStarPair(), QuinticBump(0.8, 0.4, 0.0, 1.0))


def test_weak_form_needs_levels():
    grid = Grid1D(-3.0, 3.0, 40)
    result = run(SimConfig(ThetaParam(0.5), grid, t_end=1.0), FieldSnapshot(0.0, np.ones(40), np.zeros(40)))
    with pytest.raises(DomainError):
        entropy_residual(0.5, result, EnergyStarPair(), QuinticBump(0.5, 0.4, 0.0, 1.0))


def test_plateau_cutoff_profile():
    cutoff = PlateauCutoff.around(((0.4, 0.6), (-0.5, 0.5)))
    assert cutoff.support == (pytest.approx((0.35, 0.65)), pytest.approx((-0.75, 0.75)))
    assert cutoff.values(0.5, 0.0) == pytest.approx(1.0)
    assert cutoff.values(0.5, 0.75) == pytest.approx(0.0)
    assert 0.0 < cutoff.values(0.5, 0.6) < 1.0


def test_dissipation_is_monotone_in_compact_set(collision):
    inner = dissipation_tv_estimate(0.5, collision, ((0.4, 0.6), (-0.5, 0.5)))
    outer = dissipation_tv_estimate(0.5, collision, ((0.3, 0.7), (-1.0, 1.0)))
    assert 0.0 < inner <= outer + 1e-12


def test_snapshot_csv(tmp_path):
    grid = Grid1D(0.0, 1.0, 4)
    snapshot = FieldSnapshot(0.5, np.array([1.0, 0.0, 2.0, 0.5]), np.array([0.5, 0.0, -1.0, 0.0]))
    path = write_snapshot_csv(snapshot, grid, 0.5, tmp_path)
    assert path.name == "snap_t0.5.csv"
    assert path.read_text().splitlines()[0] == "x,rho,m,u,w1,w2"
    frame = pd.read_csv(path)
    assert math.isnan(frame["u"][1])
    assert frame["w1"][0] == pytest.approx(0.5 + 2.0)
    assert list(tmp_path.glob("*.tmp")) == []


@pytest.mark.slow
def test_dam_break_converges_to_exact_solution():
    theta = 0.5
    data = RiemannData.from_values(theta, 1.0, 0.0, 0.5, 0.0)
    sizes = [200, 400, 800, 1600]
    errors = []
    for n_cells in sizes:
        grid = Grid1D(-1.0, 1.0, n_cells)
        result = run(SimConfig(ThetaParam(theta), grid, t_end=0.5), riemann_initial(grid, data))
        errors.append(l1_distance_to_exact(result.final, grid, data)[0])
    orders = [math.log2(a / b) for a, b in zip(errors[:-1], errors[1:])]
    assert all(b < a for a, b in zip(errors[:-1], errors[1:]))
    assert sum(orders) / len(orders) >= 0.6
