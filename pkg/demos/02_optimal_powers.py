"""Closed-form transmit powers versus brute force.

Shows the single-deceiver closed form landing on the grid-search optimum,
the zero-energy infeasibility case, and the known limitation of the
single-eavesdropper equal-odds allocation on heterogeneous geometry.
"""

from splitjam.powerstar import (DeceiverGeometry, HopBudget, HopGeometry,
                                constraint_residuals, cor1_powers,
                                cor2_powers, feasibility, grid_oracle,
                                two_deceiver_simplex_search)
from splitjam.topology import Device, Position, Scenario

scn = Scenario(
    devices=(Device(Position(0, 0), 5e9, 1e5, 1e-19),
             Device(Position(100, 0), 5e9, 1e5, 1e-19)),
    server=Device(Position(0, 100), 5e9, 1e5, 1e-19),
    eavesdroppers=(), bandwidth_hz=1e6, noise_psd=1e-12, rayleigh_o=1.0,
    area_side=800.0, time_budget=8.0, energy_budget=75.0)

geom = HopGeometry(
    m_tx_rx=100.0,
    deceivers=(DeceiverGeometry(m_interference=150.0, m_to_eaves=(250.0,)),),
    m_tx_to_eaves=(300.0,), monitor_probs=(0.8,), delta_bits=1e6)
budget = HopBudget(time_budget=2.0, energy_budget=0.01, payload_bits=1e6)

sol = cor1_powers(geom, scn, budget)
grid = grid_oracle(geom, scn, budget, grid_resolution=1000)
t_res, e_res = constraint_residuals(sol, geom, scn, budget)
print("single deceiver, interference-coupled rate:")
print(f"  closed form: p_tx={sol.p_tx:.6f} W, p_d={sol.p_deceivers[0]:.6f} W,"
      f" leakage {sol.objective:,.1f} bits")
print(f"  grid search: p_tx={grid.p_tx:.6f} W, p_d={grid.p_deceivers[0]:.6f} W,"
      f" leakage {grid.objective:,.1f} bits")
print(f"  constraint residuals: time {t_res:.1e}, energy {e_res:.1e}")

zero = HopBudget(time_budget=2.0, energy_budget=0.0, payload_bits=1e6)
print(f"\nzero energy budget feasible? {feasibility(zero, 100.0, scn)} "
      f"(closed form reports feasible={cor1_powers(geom, scn, zero).feasible})")

print("\nsingle eavesdropper, equidistant deceivers (equal-odds optimal):")
sym = HopGeometry(
    m_tx_rx=100.0,
    deceivers=(DeceiverGeometry(120.0, (250.0,)),
               DeceiverGeometry(140.0, (250.0,))),
    m_tx_to_eaves=(300.0,), monitor_probs=(0.8,), delta_bits=1e6)
sol2 = cor2_powers(sym, scn, HopBudget(2.0, 0.05, 5e5))
print(f"  p_tx={sol2.p_tx:.6f} W, deceiver powers {sol2.p_deceivers}, "
      f"leakage {sol2.objective:,.1f} bits")

print("\n...and its failure mode on heterogeneous geometry:")
het = HopGeometry(
    m_tx_rx=100.0,
    deceivers=(DeceiverGeometry(120.0, (400.0,)),
               DeceiverGeometry(120.0, (100.0,))),
    m_tx_to_eaves=(200.0,), monitor_probs=(0.8,), delta_bits=1e6)
het_budget = HopBudget(2.0, 0.05, 2e5)
closed = cor2_powers(het, scn, het_budget)
best = two_deceiver_simplex_search(het, scn, het_budget, resolution=600)
print(f"  equal-odds allocation leaks {closed.objective:,.1f} bits")
print(f"  full-simplex optimum leaks  {best.objective:,.1f} bits "
      f"({closed.objective / best.objective:.1f}x better); equalizing the "
      "odds factors is only optimal for equidistant deceivers")
