"""Closed-form optimal transmit powers for two special hop settings, with a
grid-search oracle.

Both closed forms pin the hop at the budget-binding point: the rate
constraint holds with equality and the transmit-plus-deceiver power sum
equals ``B_E / B_T`` (energy is charged over the full time budget).  Setting
one covers a single deceiver under the interference-coupled rate, where the
rate's interference term uses the transmitter-to-deceiver distance; setting
two covers one eavesdropper with many deceivers under an interference-free
rate, where the optimum equalizes every deceiver's two-way odds factor.
Outside these settings no closed form exists and the scheduling agent owns
the problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry
from .topology import Scenario


@dataclass(frozen=True)
class HopBudget:
    time_budget: float
    energy_budget: float
    payload_bits: float

    def __post_init__(self):
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")
        if self.energy_budget < 0:
            raise ValueError("energy_budget must be nonnegative")
        if self.payload_bits <= 0:
            raise ValueError("payload_bits must be positive")


@dataclass(frozen=True)
class DeceiverGeometry:
    """One deceiver's distances: to the receiver-side interference point and
    to each eavesdropper."""

    m_interference: float
    m_to_eaves: tuple[float, ...]


@dataclass(frozen=True)
class HopGeometry:
    m_tx_rx: float
    deceivers: tuple[DeceiverGeometry, ...]
    m_tx_to_eaves: tuple[float, ...]
    monitor_probs: tuple[float, ...]
    delta_bits: float

    def __post_init__(self):
        if self.m_tx_rx <= 0:
            raise DegenerateGeometry("transmitter and receiver coincide")
        for d in self.deceivers:
            if d.m_interference <= 0 or any(m <= 0 for m in d.m_to_eaves):
                raise DegenerateGeometry("deceiver distances must be positive")
            if len(d.m_to_eaves) != len(self.m_tx_to_eaves):
                raise ValueError("inconsistent eavesdropper counts")
        if any(m <= 0 for m in self.m_tx_to_eaves):
            raise DegenerateGeometry("eavesdropper distances must be positive")
        if len(self.monitor_probs) != len(self.m_tx_to_eaves):
            raise ValueError("one monitor probability per eavesdropper")


@dataclass(frozen=True)
class PowerSolution:
    p_tx: float
    p_deceivers: tuple[float, ...]
    feasible: bool
    objective: float


def leakage_objective(p_tx: float, p_deceivers, geom: HopGeometry) -> float:
    """Expected leaked bits of one hop at the given powers."""
    if p_tx == 0.0:
        return 0.0
    total = 0.0
    for e, (m_se, q) in enumerate(zip(geom.m_tx_to_eaves, geom.monitor_probs)):
        c_tx = p_tx * m_se ** -2.0
        prob = 1.0
        for d, p_d in zip(geom.deceivers, p_deceivers):
            c_d = p_d * d.m_to_eaves[e] ** -2.0
            prob *= c_tx / (c_d + c_tx)
        total += prob * q * geom.delta_bits
    return total


def _rate_terms(geom: HopGeometry, scn: Scenario, budget: HopBudget):
    """(xi0, chi1, chi2, snr_min) shared by both closed forms."""
    snr_min = 2.0 ** (budget.payload_bits / (budget.time_budget
                                             * scn.bandwidth_hz)) - 1.0
    xi0 = geom.m_tx_rx ** -2.0 * scn.rayleigh_o
    chi1 = scn.noise_power * snr_min
    chi2 = budget.energy_budget / budget.time_budget
    return xi0, chi1, chi2, snr_min


def feasibility(budget: HopBudget, m_tx_rx: float, scn: Scenario) -> bool:
    """True iff a positive deceiver power fits both budgets (strict)."""
    snr_min = 2.0 ** (budget.payload_bits / (budget.time_budget
                                             * scn.bandwidth_hz)) - 1.0
    lhs = (m_tx_rx ** -2.0 * scn.rayleigh_o
           * budget.energy_budget / budget.time_budget)
    return lhs - scn.noise_power * snr_min > 0.0


def cor1_powers(geom: HopGeometry, scn: Scenario,
                budget: HopBudget) -> PowerSolution:
    """Optimal powers for the single-deceiver, interference-coupled hop.

    Both constraints are active at the optimum, which yields a 2x2 linear
    system; the solution is infeasible when the implied deceiver power is
    not strictly positive.
    """
    if len(geom.deceivers) != 1:
        raise ValueError("this closed form covers exactly one deceiver")
    xi0, chi1, chi2, snr_min = _rate_terms(geom, scn, budget)
    xi_d = geom.deceivers[0].m_interference ** -2.0 * scn.rayleigh_o * snr_min
    p_tx = (chi1 + xi_d * chi2) / (xi0 + xi_d)
    p_d = (xi0 * chi2 - chi1) / (xi0 + xi_d)
    feasible = p_d > 0.0
    objective = leakage_objective(p_tx, (p_d,), geom) if feasible else math.nan
    return PowerSolution(p_tx=p_tx, p_deceivers=(p_d,), feasible=feasible,
                         objective=objective)


def cor2_powers(geom: HopGeometry, scn: Scenario,
                budget: HopBudget) -> PowerSolution:
    """Closed-form powers for one eavesdropper under an interference-free
    rate.

    The transmit power depends only on the rate constraint; the remaining
    power budget is spread over deceivers proportionally to their squared
    distance to the eavesdropper, which makes all two-way odds factors
    equal.  Factor equalization is genuinely optimal when the deceivers are
    equidistant from the eavesdropper (by symmetry and concavity of the
    log-objective); for heterogeneous distances it is not, and
    :func:`two_deceiver_simplex_search` exhibits allocations with strictly
    lower leakage; the closed form keeps the equalized allocation regardless.
    """
    if len(geom.m_tx_to_eaves) != 1:
        raise ValueError("this closed form covers exactly one eavesdropper")
    if not geom.deceivers:
        raise ValueError("at least one deceiver required")
    xi0, chi1, chi2, snr_min = _rate_terms(geom, scn, budget)
    p_tx = chi1 / xi0
    spare = xi0 * chi2 - chi1
    sum_m2 = sum(d.m_to_eaves[0] ** 2 for d in geom.deceivers)
    p_ds = tuple(spare / (xi0 * d.m_to_eaves[0] ** -2.0 * sum_m2)
                 for d in geom.deceivers)
    feasible = spare > 0.0
    objective = leakage_objective(p_tx, p_ds, geom) if feasible else math.nan
    return PowerSolution(p_tx=p_tx, p_deceivers=p_ds, feasible=feasible,
                         objective=objective)


def grid_oracle(geom: HopGeometry, scn: Scenario, budget: HopBudget,
                grid_resolution: int = 1000,
                interference_free: bool = False) -> PowerSolution:
    """Exhaustive grid search over the feasible power set.

    Axes are the transmit power and a single shared deceiver power, both on
    ``[0, B_E/B_T]``.  Feasibility requires the rate constraint (with or
    without deceiver interference, matching the closed form under test) and
    ``(p_tx + sum p_d) * B_T <= B_E``.  Ties on the objective break toward
    the lowest total power.
    """
    if grid_resolution < 100:
        raise ValueError("grid_resolution must be at least 100")
    xi0, chi1, chi2, snr_min = _rate_terms(geom, scn, budget)
    n_dec = len(geom.deceivers)
    p_tx_axis = np.linspace(0.0, chi2, grid_resolution)
    p_d_axis = np.linspace(0.0, chi2, grid_resolution)
    ptx = p_tx_axis[:, None]
    pd = p_d_axis[None, :]

    if interference_free:
        interference = 0.0
    else:
        inter_gain = sum(d.m_interference ** -2.0 * scn.rayleigh_o
                         for d in geom.deceivers)
        interference = pd * inter_gain
    time_ok = ptx * xi0 >= snr_min * (interference + scn.noise_power)
    energy_ok = ptx + n_dec * pd <= chi2
    feasible = time_ok & energy_ok & (ptx > 0.0)
    if not feasible.any():
        return PowerSolution(p_tx=0.0, p_deceivers=(0.0,) * n_dec,
                             feasible=False, objective=math.nan)

    objective = np.zeros((grid_resolution, grid_resolution))
    with np.errstate(invalid="ignore"):
        for e, (m_se, q) in enumerate(zip(geom.m_tx_to_eaves,
                                          geom.monitor_probs)):
            c_tx = ptx * m_se ** -2.0
            prob = np.ones_like(objective)
            for d in geom.deceivers:
                c_d = pd * d.m_to_eaves[e] ** -2.0
                prob = prob * (c_tx / (c_d + c_tx))
            objective += prob * q * geom.delta_bits
    objective = np.where(feasible, objective, np.inf)

    best = objective.min()
    ties = np.argwhere(objective == best)
    totals = p_tx_axis[ties[:, 0]] + n_dec * p_d_axis[ties[:, 1]]
    i, j = ties[int(np.argmin(totals))]
    return PowerSolution(
        p_tx=float(p_tx_axis[i]),
        p_deceivers=(float(p_d_axis[j]),) * n_dec,
        feasible=True,
        objective=float(objective[i, j]),
    )


def two_deceiver_simplex_search(geom: HopGeometry, scn: Scenario,
                                budget: HopBudget,
                                resolution: int = 400) -> PowerSolution:
    """Brute-force search over the full two-deceiver power simplex.

    The transmit power is pinned at the rate-constraint minimum (leakage is
    increasing in it, so nothing else can be optimal); the two deceiver
    powers range over the remaining budget.  Exists to demonstrate where
    the equal-odds closed form stops being optimal.
    """
    if len(geom.deceivers) != 2 or len(geom.m_tx_to_eaves) != 1:
        raise ValueError("this search covers exactly two deceivers and "
                         "one eavesdropper")
    xi0, chi1, chi2, _ = _rate_terms(geom, scn, budget)
    p_tx = chi1 / xi0
    spare = chi2 - p_tx
    if spare <= 0:
        return PowerSolution(p_tx=p_tx, p_deceivers=(0.0, 0.0),
                             feasible=False, objective=math.nan)
    axis = np.linspace(0.0, spare, resolution)
    p1 = axis[:, None]
    p2 = axis[None, :]
    ok = p1 + p2 <= spare
    m_se = geom.m_tx_to_eaves[0]
    c_tx = p_tx * m_se ** -2.0
    f1 = c_tx / (p1 * geom.deceivers[0].m_to_eaves[0] ** -2.0 + c_tx)
    f2 = c_tx / (p2 * geom.deceivers[1].m_to_eaves[0] ** -2.0 + c_tx)
    objective = np.where(ok, f1 * f2 * geom.monitor_probs[0]
                         * geom.delta_bits, np.inf)
    i, j = np.unravel_index(int(np.argmin(objective)), objective.shape)
    return PowerSolution(p_tx=p_tx,
                         p_deceivers=(float(axis[i]), float(axis[j])),
                         feasible=True, objective=float(objective[i, j]))


def constraint_residuals(sol: PowerSolution, geom: HopGeometry, scn: Scenario,
                         budget: HopBudget,
                         interference_free: bool = False) -> tuple[float, float]:
    """Relative residuals (time, energy) of a power solution.

    Nonpositive values mean the constraint is satisfied.
    """
    if interference_free:
        interference = 0.0
    else:
        interference = sum(p_d * d.m_interference ** -2.0 * scn.rayleigh_o
                           for d, p_d in zip(geom.deceivers, sol.p_deceivers))
    snr = (sol.p_tx * geom.m_tx_rx ** -2.0 * scn.rayleigh_o
           / (interference + scn.noise_power))
    rate = scn.bandwidth_hz * math.log2(1.0 + snr)
    t_hop = budget.payload_bits / rate
    time_res = (t_hop - budget.time_budget) / budget.time_budget
    energy = (sol.p_tx + sum(sol.p_deceivers)) * budget.time_budget
    energy_res = (energy - budget.energy_budget) / budget.energy_budget
    return time_res, energy_res
