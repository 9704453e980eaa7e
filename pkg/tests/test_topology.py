import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from splitjam.errors import DegenerateGeometry
from splitjam.topology import (GenDefaults, Position, Scenario, device,
                               distance, eavesdropper, gen_scenario,
                               mean_gain, sample_rx_power, SERVER)


def test_distance_pythagorean():
    assert distance(Position(0, 0), Position(3, 4)) == 5.0


def test_distance_identity():
    assert distance(Position(12.5, -3.0), Position(12.5, -3.0)) == 0.0


def test_distance_diagonal():
    got = distance(Position(0, 0), Position(800, 800))
    assert got == pytest.approx(800.0 * math.sqrt(2.0), rel=1e-15)


@pytest.fixture(scope="module")
def scn():
    return gen_scenario(42, u_count=6, e_count=2)


def _scenario_with_positions(positions):
    base = gen_scenario(0, u_count=len(positions))
    devices = tuple(
        type(d)(Position(*p), d.cpu_hz, d.cycles_per_bit, d.energy_coeff)
        for d, p in zip(base.devices, positions))
    return Scenario(devices=devices, server=base.server,
                    eavesdroppers=base.eavesdroppers,
                    bandwidth_hz=base.bandwidth_hz,
                    noise_psd=base.noise_psd, rayleigh_o=1.0,
                    area_side=base.area_side,
                    time_budget=base.time_budget,
                    energy_budget=base.energy_budget)


def test_mean_gain_inverse_square():
    scn = _scenario_with_positions([(0, 0), (100, 0), (200, 0), (1, 0)])
    assert mean_gain(device(0), device(1), scn) == pytest.approx(1e-4)
    assert mean_gain(device(0), device(3), scn) == 1.0
    ratio = (mean_gain(device(0), device(2), scn)
             / mean_gain(device(0), device(1), scn))
    assert ratio == pytest.approx(0.25, rel=1e-12)


def test_mean_gain_errors():
    scn = _scenario_with_positions([(5, 5), (5, 5)])
    with pytest.raises(DegenerateGeometry):
        mean_gain(device(0), device(1), scn)
    with pytest.raises(ValueError):
        mean_gain(device(0), device(0), scn)


@given(st.floats(1.0, 1e4), st.floats(1.0, 1e4))
def test_gain_monotone_in_distance(m1, m2):
    scn = _scenario_with_positions([(0, 0), (m1, 0), (m2, 0)])
    if m1 == m2:
        return
    g1 = mean_gain(device(0), device(1), scn)
    g2 = mean_gain(device(0), device(2), scn)
    assert (g1 > g2) == (m1 < m2)


def test_sample_rx_power_zero_power(scn):
    rng = np.random.default_rng(0)
    draw = sample_rx_power(0.0, device(0), device(1), scn, rng)
    assert draw.rx_power == 0.0


def test_sample_rx_power_rejects_negative(scn):
    with pytest.raises(ValueError):
        sample_rx_power(-1.0, device(0), device(1), scn,
                        np.random.default_rng(0))


def test_sample_rx_power_deterministic(scn):
    a = sample_rx_power(0.2, device(0), SERVER, scn,
                        np.random.default_rng(7))
    b = sample_rx_power(0.2, device(0), SERVER, scn,
                        np.random.default_rng(7))
    assert a == b


def test_sample_rx_power_mean():
    # Mean of many draws matches the analytic mean within 3 sigma.
    scn = _scenario_with_positions([(0, 0), (1000, 0)])
    p = 1.0  # p * h = 1e-6
    rng = np.random.default_rng(123)
    n = 10 ** 6
    draws = np.array([sample_rx_power(p, device(0), device(1), scn,
                                      rng).rx_power
                      for _ in range(n // 100)])
    # Keep the scalar-API loop small; top up with a vectorized equivalent.
    mean_gain_val = mean_gain(device(0), device(1), scn)
    bulk = rng.standard_exponential(n - draws.size) * (p * mean_gain_val)
    sample = np.concatenate([draws, bulk])
    expect = p * mean_gain_val
    assert abs(sample.mean() - expect) <= 3.0 * expect / math.sqrt(n)


def test_exponential_fading_ks():
    scn = _scenario_with_positions([(0, 0), (500, 0)])
    p = 0.3
    scale = p * mean_gain(device(0), device(1), scn)
    rng = np.random.default_rng(2024)
    draws = rng.standard_exponential(10 ** 5) * scale
    result = stats.kstest(draws, "expon", args=(0.0, scale))
    assert result.pvalue > 0.01


def test_gen_scenario_deterministic():
    assert gen_scenario(42) == gen_scenario(42)
    assert gen_scenario(42) != gen_scenario(43)


def test_gen_scenario_counts(scn):
    assert len(scn.devices) == 6
    assert len(scn.eavesdroppers) == 2
    assert scn.server is not None


def test_gen_scenario_parameter_ranges(scn):
    for d in scn.devices:
        assert 4e9 <= d.cpu_hz <= 7e9
        assert 1e4 <= d.cycles_per_bit <= 1e6
        assert 0.0 <= d.position.x <= scn.area_side
        assert 0.0 <= d.position.y <= scn.area_side
    assert scn.time_budget == 8.0
    assert scn.energy_budget == 75.0
    assert scn.noise_psd == 1e-12
    assert all(e.monitor_prob == 0.8 for e in scn.eavesdroppers)


def test_gen_scenario_rejects_tiny_network():
    with pytest.raises(ValueError):
        gen_scenario(0, u_count=1)


def test_gen_defaults_override():
    scn = gen_scenario(0, defaults=GenDefaults(monitor_prob=0.5))
    assert all(e.monitor_prob == 0.5 for e in scn.eavesdroppers)
    assert eavesdropper(0).index == 0
