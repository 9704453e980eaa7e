"""Capture sampling, per-iteration leakage, and its closed form with a
Monte Carlo oracle.

An eavesdropper keeps only the strongest received signal.  Received powers
fade exponentially with mean ``p * o * m**-2``, and the transmitter's fading
is drawn independently for each transmitter-vs-deceiver comparison, so the
capture probability factors into a product of two-way odds

    P(capture) = prod_d  p_s m_se^-2 / (p_d m_de^-2 + p_s m_se^-2)

which :func:`capture_prob_closed` evaluates and :func:`mc_leakage_oracle`
recovers by simulation.  A hop leaks ``delta`` bits to an eavesdropper only
when that eavesdropper is monitoring (probability q, drawn as ``u < q`` from
a shared uniform so leakage is monotone in q under common random numbers)
and the transmitter's signal wins every comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .costmodel import TransmissionSpec
from .errors import DegenerateGeometry
from .slmodel import Segment
from .topology import Eavesdropper, NodeId, NodeKind, Scenario, distance


@dataclass(frozen=True)
class CaptureOutcome:
    eavesdropper: NodeId
    captured_source: NodeId | None
    monitored: bool
    leaked_bits: float


@dataclass(frozen=True)
class LeakageReport:
    """Expected leaked bits, with per-eavesdropper and per-hop breakdowns.

    ``expected_bits`` equals the plain left-fold sum of ``per_hop``.
    """

    expected_bits: float
    per_eavesdropper: tuple[float, ...]
    per_hop: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "expected_bits": self.expected_bits,
            "per_eavesdropper": list(self.per_eavesdropper),
            "per_hop": list(self.per_hop),
        }


def delta(t: TransmissionSpec, segment: Segment) -> float:
    """Bits an eavesdropper gains from one captured, monitored hop."""
    return t.payload_bits * segment.sensitivity_weight


def _fading_mean(power: float, node: NodeId, eave: Eavesdropper,
                 scn: Scenario) -> float:
    m = distance(scn.position_of(node), eave.position)
    if m == 0.0:
        raise DegenerateGeometry(f"node {node} sits on an eavesdropper")
    return power * scn.rayleigh_o * m ** -2.0


def sample_capture(t: TransmissionSpec, e_index: int, scn: Scenario,
                   rng: np.random.Generator,
                   delta_bits: float | None = None) -> CaptureOutcome:
    """Sample one hop as seen by eavesdropper ``e_index``.

    Draw order (fixed): one uniform for the monitoring indicator, then per
    deceiver one transmitter fading draw and one deceiver fading draw.  With
    no deceivers the transmitter is captured whenever it transmits at all.
    """
    eave = scn.eavesdroppers[e_index]
    if delta_bits is None:
        delta_bits = t.payload_bits
    monitored = bool(rng.random() < eave.monitor_prob)

    tx_mean = _fading_mean(t.tx_power, t.tx, eave, scn)
    tx_wins = t.tx_power > 0.0
    best_deceiver = None
    best_draw = -1.0
    for d in t.deceivers:
        d_mean = _fading_mean(d.power, d.node, eave, scn)
        tx_draw = float(rng.standard_exponential()) * tx_mean
        d_draw = float(rng.standard_exponential()) * d_mean
        if not tx_draw > d_draw:
            tx_wins = False
        if d_draw > best_draw:
            best_draw = d_draw
            best_deceiver = d.node

    if tx_wins:
        source = t.tx
    else:
        source = best_deceiver
    leaked = delta_bits if (monitored and tx_wins) else 0.0
    return CaptureOutcome(
        eavesdropper=NodeId(NodeKind.EAVESDROPPER, e_index),
        captured_source=source,
        monitored=monitored,
        leaked_bits=leaked,
    )


def capture_prob_closed(t: TransmissionSpec, e_index: int,
                        scn: Scenario) -> float:
    """Closed-form probability that the transmitter's signal is captured.

    Zero transmit power means nothing to capture, so the probability is 0
    regardless of the deceiver set; otherwise the product of two-way odds.
    """
    if t.tx_power == 0.0:
        return 0.0
    eave = scn.eavesdroppers[e_index]
    c_tx = _fading_mean(t.tx_power, t.tx, eave, scn)
    prob = 1.0
    for d in t.deceivers:
        c_d = _fading_mean(d.power, d.node, eave, scn)
        prob *= c_tx / (c_d + c_tx)
    return prob


def expected_leakage_closed(hops: list[tuple[TransmissionSpec, Segment]],
                            scn: Scenario) -> LeakageReport:
    """Expected leaked bits over all hops and eavesdroppers."""
    n_e = scn.eavesdropper_count
    per_hop = []
    per_eav = [0.0] * n_e
    for t, seg in hops:
        d_bits = delta(t, seg)
        hop_total = 0.0
        for e in range(n_e):
            contrib = (capture_prob_closed(t, e, scn)
                       * scn.eavesdroppers[e].monitor_prob * d_bits)
            hop_total += contrib
            per_eav[e] += contrib
        per_hop.append(hop_total)
    expected = 0.0
    for h in per_hop:
        expected += h
    return LeakageReport(expected_bits=expected,
                         per_eavesdropper=tuple(per_eav),
                         per_hop=tuple(per_hop))


def mc_leakage_oracle(hops: list[tuple[TransmissionSpec, Segment]],
                      scn: Scenario, n_samples: int,
                      seed: int) -> tuple[float, float]:
    """Monte Carlo estimate (mean, stderr) of episode leakage.

    Each sample replays every hop against every eavesdropper with fresh
    monitoring and fading draws under the same semantics as
    :func:`sample_capture`; the vectorization changes the stream layout but
    not the distribution.  ``stderr`` is NaN for a single sample.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x3C]))
    totals = np.zeros(n_samples)
    for t, seg in hops:
        d_bits = delta(t, seg)
        for e in range(scn.eavesdropper_count):
            eave = scn.eavesdroppers[e]
            monitored = rng.random(n_samples) < eave.monitor_prob
            tx_mean = _fading_mean(t.tx_power, t.tx, eave, scn)
            wins = np.full(n_samples, t.tx_power > 0.0)
            for d in t.deceivers:
                d_mean = _fading_mean(d.power, d.node, eave, scn)
                tx_draw = rng.standard_exponential(n_samples) * tx_mean
                d_draw = rng.standard_exponential(n_samples) * d_mean
                wins &= tx_draw > d_draw
            totals += d_bits * (monitored & wins)
    mean = float(totals.mean())
    if n_samples == 1:
        return mean, float("nan")
    stderr = float(totals.std(ddof=1) / math.sqrt(n_samples))
    return mean, stderr
