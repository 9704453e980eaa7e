import math

import numpy as np
import pytest

from splitjam.errors import DegenerateGeometry
from splitjam.powerstar import (DeceiverGeometry, HopBudget, HopGeometry,
                                constraint_residuals, cor1_powers,
                                cor2_powers, feasibility, grid_oracle,
                                leakage_objective,
                                two_deceiver_simplex_search)
from splitjam.topology import Device, Position, Scenario


def _scn(bandwidth=1e6, noise_psd=1e-12, o=1.0):
    d0 = Device(Position(0, 0), 5e9, 1e5, 1e-19)
    d1 = Device(Position(10, 0), 5e9, 1e5, 1e-19)
    return Scenario(devices=(d0, d1),
                    server=Device(Position(0, 10), 5e9, 1e5, 1e-19),
                    eavesdroppers=(), bandwidth_hz=bandwidth,
                    noise_psd=noise_psd, rayleigh_o=o, area_side=800.0,
                    time_budget=8.0, energy_budget=75.0)


def _geom_one_deceiver(m_tx_rx=100.0, m_int=150.0, m_se=(300.0,),
                       m_de=(250.0,), q=(0.8,), delta=1e5):
    return HopGeometry(
        m_tx_rx=m_tx_rx,
        deceivers=(DeceiverGeometry(m_interference=m_int, m_to_eaves=m_de),),
        m_tx_to_eaves=m_se, monitor_probs=q, delta_bits=delta)


def test_cor1_budget_identity():
    scn = _scn()
    budget = HopBudget(time_budget=2.0, energy_budget=0.01,
                       payload_bits=1e6)
    sol = cor1_powers(_geom_one_deceiver(), scn, budget)
    assert sol.feasible
    assert sol.p_tx + sol.p_deceivers[0] == pytest.approx(
        budget.energy_budget / budget.time_budget, rel=1e-12)


def test_cor1_zero_energy_infeasible():
    scn = _scn()
    budget = HopBudget(time_budget=2.0, energy_budget=0.0,
                       payload_bits=1e6)
    sol = cor1_powers(_geom_one_deceiver(), scn, budget)
    assert not sol.feasible
    assert not feasibility(budget, 100.0, scn)


def test_cor1_requires_one_deceiver():
    scn = _scn()
    geom = HopGeometry(m_tx_rx=100.0, deceivers=(),
                       m_tx_to_eaves=(300.0,), monitor_probs=(0.8,),
                       delta_bits=1e5)
    with pytest.raises(ValueError):
        cor1_powers(geom, scn, HopBudget(1.0, 0.01, 1e5))


def test_cor1_matches_grid_oracle():
    # The worked single-deceiver case: closed form lands on the grid
    # optimum within tolerance and satisfies both constraints tightly.
    scn = _scn()
    geom = _geom_one_deceiver(m_tx_rx=100.0, m_int=150.0)
    budget = HopBudget(time_budget=2.0, energy_budget=0.01,
                       payload_bits=1e6)
    sol = cor1_powers(geom, scn, budget)
    assert sol.feasible
    t_res, e_res = constraint_residuals(sol, geom, scn, budget)
    assert t_res <= 1e-9
    assert e_res <= 1e-9
    grid = grid_oracle(geom, scn, budget, grid_resolution=1000)
    assert grid.feasible
    assert (sol.objective - grid.objective) / grid.objective <= 1e-3
    # Grid point within one cell of the closed form.
    cell = (budget.energy_budget / budget.time_budget) / 999
    assert abs(grid.p_tx - sol.p_tx) <= cell + 1e-15
    assert abs(grid.p_deceivers[0] - sol.p_deceivers[0]) <= cell + 1e-15


def test_cor2_transmit_power_example():
    # Payload equal to B_T * B makes the exponent term one, so the transmit
    # power reduces to B*N0*m^2/o = 1e-2 W.
    scn = _scn()
    geom = HopGeometry(
        m_tx_rx=100.0,
        deceivers=(DeceiverGeometry(120.0, (200.0,)),
                   DeceiverGeometry(140.0, (200.0,))),
        m_tx_to_eaves=(300.0,), monitor_probs=(0.8,), delta_bits=1e5)
    budget = HopBudget(time_budget=2.0, energy_budget=0.1,
                       payload_bits=2e6)
    sol = cor2_powers(geom, scn, budget)
    assert sol.p_tx == pytest.approx(1e-2, rel=1e-12)


def test_cor2_transmit_power_decreases_with_time_budget():
    scn = _scn()
    geom = HopGeometry(
        m_tx_rx=100.0, deceivers=(DeceiverGeometry(120.0, (200.0,)),),
        m_tx_to_eaves=(300.0,), monitor_probs=(0.8,), delta_bits=1e5)
    tight = cor2_powers(geom, scn, HopBudget(1.0, 0.1, 5e5))
    loose = cor2_powers(geom, scn, HopBudget(2.0, 0.2, 5e5))
    assert loose.p_tx < tight.p_tx


def test_cor2_equidistant_deceivers_share_power():
    scn = _scn()
    geom = HopGeometry(
        m_tx_rx=100.0,
        deceivers=(DeceiverGeometry(110.0, (250.0,)),
                   DeceiverGeometry(130.0, (250.0,)),
                   DeceiverGeometry(150.0, (250.0,))),
        m_tx_to_eaves=(300.0,), monitor_probs=(0.8,), delta_bits=1e5)
    budget = HopBudget(time_budget=2.0, energy_budget=0.05,
                       payload_bits=5e5)
    sol = cor2_powers(geom, scn, budget)
    assert sol.feasible
    assert max(sol.p_deceivers) == pytest.approx(min(sol.p_deceivers),
                                                 rel=1e-12)
    total = sol.p_tx
    for p in sol.p_deceivers:
        total += p
    assert total == pytest.approx(budget.energy_budget / budget.time_budget,
                                  rel=1e-12)


def test_cor2_odds_factors_equalized():
    scn = _scn()
    geom = HopGeometry(
        m_tx_rx=100.0,
        deceivers=(DeceiverGeometry(110.0, (150.0,)),
                   DeceiverGeometry(130.0, (420.0,))),
        m_tx_to_eaves=(300.0,), monitor_probs=(0.8,), delta_bits=1e5)
    sol = cor2_powers(geom, scn, HopBudget(2.0, 0.05, 5e5))
    c_tx = sol.p_tx * 300.0 ** -2.0
    factors = [c_tx / (p * d.m_to_eaves[0] ** -2.0 + c_tx)
               for p, d in zip(sol.p_deceivers, geom.deceivers)]
    assert factors[0] == pytest.approx(factors[1], rel=1e-12)


def test_cor2_equal_odds_allocation_is_not_globally_optimal():
    # Known limitation of the equal-odds allocation: for heterogeneous
    # deceiver-to-eavesdropper distances, searching the full power simplex
    # finds strictly less leakage than equalizing the odds factors.
    scn = _scn()
    geom = HopGeometry(
        m_tx_rx=100.0,
        deceivers=(DeceiverGeometry(120.0, (400.0,)),
                   DeceiverGeometry(120.0, (100.0,))),
        m_tx_to_eaves=(200.0,), monitor_probs=(0.8,), delta_bits=1e5)
    budget = HopBudget(time_budget=2.0, energy_budget=0.05,
                       payload_bits=2e5)
    closed = cor2_powers(geom, scn, budget)
    best = two_deceiver_simplex_search(geom, scn, budget, resolution=600)
    assert closed.feasible and best.feasible
    assert closed.objective > 1.5 * best.objective


def test_objective_weakly_decreases_in_energy_budget():
    scn = _scn()
    geom = _geom_one_deceiver()
    payload = 5e5
    objectives = []
    for b_e in (0.004, 0.008, 0.016, 0.032, 0.064):
        sol = cor1_powers(geom, scn, HopBudget(2.0, b_e, payload))
        if sol.feasible:
            objectives.append(sol.objective)
    assert len(objectives) >= 3
    assert all(a >= b for a, b in zip(objectives, objectives[1:]))


def test_grid_oracle_reports_empty_feasible_set():
    scn = _scn()
    geom = _geom_one_deceiver()
    sol = grid_oracle(geom, scn, HopBudget(0.01, 1e-9, 1e6),
                      grid_resolution=200)
    assert not sol.feasible


def test_grid_oracle_dominates_hand_picked_points():
    scn = _scn()
    geom = _geom_one_deceiver()
    budget = HopBudget(2.0, 0.01, 5e5)
    grid = grid_oracle(geom, scn, budget, grid_resolution=500)
    chi2 = budget.energy_budget / budget.time_budget
    rng = np.random.default_rng(0)
    for _ in range(50):
        p_tx = float(rng.uniform(0, chi2))
        p_d = float(rng.uniform(0, chi2 - p_tx))
        sol_obj = leakage_objective(p_tx, (p_d,), geom)
        t_res, e_res = constraint_residuals(
            type(grid)(p_tx=p_tx, p_deceivers=(p_d,), feasible=True,
                       objective=sol_obj), geom, scn, budget)
        if p_tx > 0 and t_res <= 0 and e_res <= 0:
            assert grid.objective <= sol_obj + 1e-12


def test_grid_oracle_rejects_coarse_resolution():
    with pytest.raises(ValueError):
        grid_oracle(_geom_one_deceiver(), _scn(), HopBudget(1.0, 0.01, 1e5),
                    grid_resolution=50)


def test_feasibility_boundary_is_strict():
    # Payload equal to B_T*B makes snr_min exactly 1; with m = o = B_T = 1
    # the boundary B_E = B*N0 must be judged infeasible.
    scn = _scn()
    budget = HopBudget(time_budget=1.0, energy_budget=1e-6,
                       payload_bits=1e6)
    assert not feasibility(budget, 1.0, scn)
    assert feasibility(HopBudget(1.0, 1e-6 + 1e-12, 1e6), 1.0, scn)
    assert feasibility(HopBudget(1.0, 10.0, 1e6), 1.0, scn)


def test_geometry_validation():
    with pytest.raises(DegenerateGeometry):
        HopGeometry(m_tx_rx=0.0, deceivers=(), m_tx_to_eaves=(1.0,),
                    monitor_probs=(0.5,), delta_bits=1.0)
    with pytest.raises(ValueError):
        HopGeometry(m_tx_rx=1.0, deceivers=(), m_tx_to_eaves=(1.0, 2.0),
                    monitor_probs=(0.5,), delta_bits=1.0)
