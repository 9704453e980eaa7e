"""Data rates, per-hop delays, compute times, and episode cost ledgers.

Rates use mean channel gains (no fading): delay and energy are deterministic
functions of the schedule, while fading enters only the eavesdropper model.
Transmissions are TDMA-serialized, so per-hop times add.

Summation order is part of the contract.  Ledger totals are defined as
category-major folds over the per-step breakdown in step order::

    time   = sum(t_tx) + sum(t_fwd) + sum(t_bwd)
    energy = sum(e_compute) + sum(e_tx) + sum(e_deceive)

with each per-entry term computed in a fixed left-to-right form (deceiver
powers summed in list order).  Any independent re-implementation that
follows the same order reproduces the totals bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BrokenChain, UnreachableLink
from .slmodel import Segment, SplitPlan
from .topology import Device, NodeId, NodeKind, Scenario, mean_gain

import math


@dataclass(frozen=True)
class DeceiverAssignment:
    node: NodeId
    power: float


@dataclass(frozen=True)
class TransmissionSpec:
    """One hop: transmitter, receiver, payload, and active deceivers."""

    tx: NodeId
    rx: NodeId
    payload_bits: float
    tx_power: float
    deceivers: tuple[DeceiverAssignment, ...] = ()

    def __post_init__(self):
        if self.tx == self.rx:
            raise ValueError("transmitter and receiver must differ")
        if self.tx_power < 0:
            raise ValueError("tx_power must be nonnegative")
        for d in self.deceivers:
            if d.power < 0:
                raise ValueError("deceiver power must be nonnegative")
            if d.node in (self.tx, self.rx):
                raise ValueError("deceivers must exclude the transmitter "
                                 "and receiver")


@dataclass(frozen=True)
class StepCosts:
    """Cost terms attributed to one environment step."""

    t_tx: float = 0.0
    t_fwd: float = 0.0
    t_bwd: float = 0.0
    e_compute: float = 0.0
    e_tx: float = 0.0
    e_deceive: float = 0.0

    @property
    def time(self) -> float:
        return self.t_tx + self.t_fwd + self.t_bwd

    @property
    def energy(self) -> float:
        return self.e_compute + self.e_tx + self.e_deceive


@dataclass
class CostLedger:
    per_step_breakdown: list[StepCosts] = field(default_factory=list)

    @property
    def time_spent(self) -> float:
        total = 0.0
        for name in ("t_tx", "t_fwd", "t_bwd"):
            for entry in self.per_step_breakdown:
                total += getattr(entry, name)
        return total

    @property
    def energy_spent(self) -> float:
        total = 0.0
        for name in ("e_compute", "e_tx", "e_deceive"):
            for entry in self.per_step_breakdown:
                total += getattr(entry, name)
        return total

    def to_dict(self) -> dict:
        return {
            "time_spent": self.time_spent,
            "energy_spent": self.energy_spent,
            "per_step_breakdown": [
                {"t_tx": e.t_tx, "t_fwd": e.t_fwd, "t_bwd": e.t_bwd,
                 "e_compute": e.e_compute, "e_tx": e.e_tx,
                 "e_deceive": e.e_deceive}
                for e in self.per_step_breakdown
            ],
        }


def data_rate(t: TransmissionSpec, scn: Scenario) -> float:
    """Shannon rate with deceiver interference, using mean gains."""
    interference = 0.0
    for d in t.deceivers:
        interference += d.power * mean_gain(d.node, t.rx, scn)
    signal = t.tx_power * mean_gain(t.tx, t.rx, scn)
    snr = signal / (interference + scn.noise_power)
    return scn.bandwidth_hz * math.log2(1.0 + snr)


def tx_time(payload_bits: float, rate: float) -> float:
    if rate <= 0.0:
        raise UnreachableLink("data rate must be positive")
    return payload_bits / rate


def compute_times(segment: Segment, dev: Device) -> tuple[float, float]:
    """Forward and backward compute times of one segment on one device."""
    t_fwd = (dev.cycles_per_bit * segment.fwd_flop_coeff
             * segment.out_bits * segment.param_bits / dev.cpu_hz)
    t_bwd = (dev.cycles_per_bit * segment.bwd_flop_coeff
             * segment.grad_in_bits * segment.param_bits / dev.cpu_hz)
    return t_fwd, t_bwd


def compute_energy(segment: Segment, dev: Device) -> float:
    """Per-segment compute energy: coeff * f^2 * (lf*G + lb*G)."""
    return (dev.energy_coeff * dev.cpu_hz ** 2
            * (segment.fwd_flop_coeff * segment.param_bits
               + segment.bwd_flop_coeff * segment.param_bits))


def hop_energies(t: TransmissionSpec, t_hop: float) -> tuple[float, float]:
    """(transmitter, deceiver) energy of one hop of duration ``t_hop``."""
    e_tx = t.tx_power * t_hop
    p_dec = 0.0
    for d in t.deceivers:
        p_dec += d.power
    return e_tx, p_dec * t_hop


def episode_entries(plan: SplitPlan, assignments: tuple[NodeId, ...],
                    transmissions: list[TransmissionSpec],
                    scn: Scenario) -> list[StepCosts]:
    """Per-step cost entries for a full 2S-1 step episode.

    ``assignments[k]`` is the node holding segment k+1 (the last entry must
    be the server).  ``transmissions`` lists the S-1 forward hops in chain
    order followed by the S-1 backward hops in transmission order (server
    first).  Attribution follows the compute-then-transmit timeline: step 1
    only selects, so it carries no cost; each forward step charges the
    transmitter's forward compute (plus that segment's full compute energy)
    and the hop; the server's forward and backward compute land on its
    gradient-send step; every other trainer's update lands on its own
    gradient-send step, and the first trainer's closing update is added
    into the final step's backward-compute term (inner addition first).
    """
    s_count = plan.segment_count
    if len(assignments) != s_count:
        raise BrokenChain("one assignment per segment required")
    if assignments[-1].kind is not NodeKind.SERVER:
        raise BrokenChain("the last segment must sit on the server")
    if any(a.kind is not NodeKind.DEVICE for a in assignments[:-1]):
        raise BrokenChain("segments before the last must sit on devices")
    if len(set(assignments)) != s_count:
        raise BrokenChain("assignments must be distinct")
    if len(transmissions) != 2 * (s_count - 1):
        raise BrokenChain(f"expected {2 * (s_count - 1)} hops, "
                          f"got {len(transmissions)}")

    forward = transmissions[:s_count - 1]
    backward = transmissions[s_count - 1:]
    for k, hop in enumerate(forward):
        seg = plan.segments[k]
        if hop.tx != assignments[k] or hop.rx != assignments[k + 1]:
            raise BrokenChain(f"forward hop {k} does not follow the chain")
        if hop.payload_bits != seg.out_bits:
            raise BrokenChain(f"forward hop {k} payload mismatch")
    for i, hop in enumerate(backward):
        k = s_count - 1 - i  # transmitter's segment index (0-based)
        seg = plan.segments[k]
        if hop.tx != assignments[k] or hop.rx != assignments[k - 1]:
            raise BrokenChain(f"backward hop {i} does not follow the chain")
        if hop.payload_bits != seg.grad_in_bits:
            raise BrokenChain(f"backward hop {i} payload mismatch")

    entries = []
    devs = [scn.compute_record(a) for a in assignments]
    fwd_times = [compute_times(plan.segments[k], devs[k])[0]
                 for k in range(s_count)]
    bwd_times = [compute_times(plan.segments[k], devs[k])[1]
                 for k in range(s_count)]
    energies = [compute_energy(plan.segments[k], devs[k])
                for k in range(s_count)]

    # Step 1: pure selection.
    entries.append(StepCosts())
    # Forward steps 2..S: transmitter computes its output, then sends it.
    for k, hop in enumerate(forward):
        t_hop = tx_time(hop.payload_bits, data_rate(hop, scn))
        e_tx, e_dec = hop_energies(hop, t_hop)
        entries.append(StepCosts(
            t_tx=t_hop,
            t_fwd=fwd_times[k],
            e_compute=energies[k],
            e_tx=e_tx,
            e_deceive=e_dec,
        ))
    # Backward steps S+1..2S-1: transmitter updates, then sends the
    # gradient; the server's step also carries its forward compute, and the
    # final step also carries the first trainer's closing update.
    for i, hop in enumerate(backward):
        k = s_count - 1 - i  # transmitter's segment, 0-based
        t_hop = tx_time(hop.payload_bits, data_rate(hop, scn))
        e_tx, e_dec = hop_energies(hop, t_hop)
        t_bwd = bwd_times[k]
        if k == 1:
            t_bwd = t_bwd + bwd_times[0]
        entries.append(StepCosts(
            t_tx=t_hop,
            t_fwd=fwd_times[s_count - 1] if k == s_count - 1 else 0.0,
            t_bwd=t_bwd,
            e_compute=energies[s_count - 1] if k == s_count - 1 else 0.0,
            e_tx=e_tx,
            e_deceive=e_dec,
        ))
    return entries


def episode_totals(plan: SplitPlan, assignments: tuple[NodeId, ...],
                   transmissions: list[TransmissionSpec],
                   scn: Scenario) -> CostLedger:
    """Full-episode cost ledger (see module docstring for term order)."""
    return CostLedger(episode_entries(plan, assignments, transmissions, scn))
