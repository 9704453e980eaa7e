"""Channels, capture odds, and expected leakage.

Walks one generated network: inspects mean channel gains and data rates,
then compares the closed-form expected leakage of a jammed hop against the
Monte Carlo estimate.
"""

import numpy as np

from splitjam.costmodel import DeceiverAssignment, TransmissionSpec, data_rate
from splitjam.eavesdrop import (capture_prob_closed, expected_leakage_closed,
                                mc_leakage_oracle)
from splitjam.slmodel import make_model, split_at
from splitjam.topology import device, gen_scenario, mean_gain

scn = gen_scenario(seed=7, u_count=6, e_count=2)
print(f"network: {scn.device_count} devices, {scn.eavesdropper_count} "
      f"eavesdroppers in a {scn.area_side:.0f} m square")
print(f"bandwidth {scn.bandwidth_hz/1e6:.0f} MHz, noise floor "
      f"{scn.noise_power:.1e} W")

gain = mean_gain(device(0), device(1), scn)
print(f"\nmean gain device0 -> device1: {gain:.3e}")

model = make_model(6, "uniform", seed=7)
plan = split_at(model, [2, 4])
seg = plan.segments[0]

bare = TransmissionSpec(device(0), device(1), seg.out_bits, tx_power=0.2)
jammed = TransmissionSpec(device(0), device(1), seg.out_bits, tx_power=0.2,
                          deceivers=(DeceiverAssignment(device(3), 0.4),))
print(f"rate without deception: {data_rate(bare, scn):,.0f} bit/s")
print(f"rate with one deceiver: {data_rate(jammed, scn):,.0f} bit/s "
      "(interference costs rate, privacy gains below)")

print("\ncapture probability per eavesdropper (lower is better):")
for e in range(scn.eavesdropper_count):
    p_bare = capture_prob_closed(bare, e, scn)
    p_jam = capture_prob_closed(jammed, e, scn)
    print(f"  eavesdropper {e}: {p_bare:.3f} bare -> {p_jam:.3f} jammed")

hops = [(jammed, seg)]
closed = expected_leakage_closed(hops, scn)
mean, err = mc_leakage_oracle(hops, scn, n_samples=100_000, seed=1)
print(f"\nexpected leakage, closed form: {closed.expected_bits:,.1f} bits")
print(f"Monte Carlo (1e5 samples):     {mean:,.1f} +/- {err:,.1f} bits")
print(f"agreement: {abs(mean - closed.expected_bits) / err:.2f} standard "
      "errors")
