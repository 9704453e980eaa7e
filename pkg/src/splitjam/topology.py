"""Network geometry, mean channel gains, and Rayleigh-fading power draws.

All randomness flows through explicitly passed ``numpy.random.Generator``
streams; nothing in this module touches global RNG state.  Received powers
under fading are modelled as exponential with mean ``p * o * m**-2`` (the
standard Rayleigh-fading power model), which is the model under which the
closed-form capture probabilities in :mod:`splitjam.eavesdrop` are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateGeometry


class NodeKind(Enum):
    DEVICE = "device"
    SERVER = "server"
    EAVESDROPPER = "eavesdropper"


@dataclass(frozen=True)
class Position:
    x: float
    y: float


@dataclass(frozen=True)
class NodeId:
    kind: NodeKind
    index: int = 0


SERVER = NodeId(NodeKind.SERVER, 0)


def device(i: int) -> NodeId:
    return NodeId(NodeKind.DEVICE, i)


def eavesdropper(i: int) -> NodeId:
    return NodeId(NodeKind.EAVESDROPPER, i)


@dataclass(frozen=True)
class Device:
    """A compute node: position plus CPU and energy characteristics.

    ``cpu_hz`` is the clock frequency, ``cycles_per_bit`` the per-bit cycle
    cost of processing, and ``energy_coeff`` the chip-dependent coefficient
    multiplying the squared clock in the compute-energy model.
    """

    position: Position
    cpu_hz: float
    cycles_per_bit: float
    energy_coeff: float


@dataclass(frozen=True)
class Eavesdropper:
    position: Position
    monitor_prob: float

    def __post_init__(self):
        if not 0.0 <= self.monitor_prob <= 1.0:
            raise ValueError(f"monitor_prob must be in [0,1], got {self.monitor_prob}")


@dataclass(frozen=True)
class FadingDraw:
    rx_power: float
    source: NodeId
    sink: NodeId


@dataclass(frozen=True)
class Scenario:
    """Static description of one network: nodes, channel constants, budgets.

    The server carries the same compute fields as a device; nothing in the
    cost model distinguishes server compute from device compute.
    """

    devices: tuple[Device, ...]
    server: Device
    eavesdroppers: tuple[Eavesdropper, ...]
    bandwidth_hz: float
    noise_psd: float
    rayleigh_o: float
    area_side: float
    time_budget: float
    energy_budget: float

    def __post_init__(self):
        if len(self.devices) < 2:
            raise ValueError("need at least two devices")
        for name in ("bandwidth_hz", "noise_psd", "rayleigh_o", "area_side",
                     "time_budget", "energy_budget"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def device_count(self) -> int:
        return len(self.devices)

    @property
    def eavesdropper_count(self) -> int:
        return len(self.eavesdroppers)

    @property
    def noise_power(self) -> float:
        """Total AWGN power B*N0 in watts."""
        return self.bandwidth_hz * self.noise_psd

    def position_of(self, node: NodeId) -> Position:
        if node.kind is NodeKind.DEVICE:
            return self.devices[node.index].position
        if node.kind is NodeKind.SERVER:
            return self.server.position
        return self.eavesdroppers[node.index].position

    def compute_record(self, node: NodeId) -> Device:
        """CPU/energy record of a compute node (device or server)."""
        if node.kind is NodeKind.DEVICE:
            return self.devices[node.index]
        if node.kind is NodeKind.SERVER:
            return self.server
        raise ValueError("eavesdroppers do not compute")


def distance(a: Position, b: Position) -> float:
    """Euclidean distance in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


def mean_gain(a: NodeId, b: NodeId, scn: Scenario) -> float:
    """Mean channel gain o * m**-2 between two distinct nodes."""
    if a == b:
        raise ValueError("gain between a node and itself is undefined")
    m = distance(scn.position_of(a), scn.position_of(b))
    if m == 0.0:
        raise DegenerateGeometry(f"nodes {a} and {b} share a position")
    return scn.rayleigh_o * m ** -2.0


def sample_rx_power(tx_power: float, a: NodeId, b: NodeId, scn: Scenario,
                    rng: np.random.Generator) -> FadingDraw:
    """Draw one faded received power, exponential with mean tx_power * gain."""
    if tx_power < 0:
        raise ValueError("tx_power must be nonnegative")
    mean = tx_power * mean_gain(a, b, scn)
    rx = float(rng.standard_exponential()) * mean
    return FadingDraw(rx_power=rx, source=a, sink=b)


@dataclass(frozen=True)
class GenDefaults:
    """Parameter ranges and channel constants used by :func:`gen_scenario`.

    CPU clocks are drawn uniformly and cycle costs log-uniformly from the
    simulation-parameter ranges; the chip energy coefficient range is chosen
    so that desk-scale episodes can but do not always exhaust the energy
    budget.
    """

    cpu_hz_range: tuple[float, float] = (4.0e9, 7.0e9)
    cycles_per_bit_range: tuple[float, float] = (1.0e4, 1.0e6)
    energy_coeff_range: tuple[float, float] = (1.0e-19, 5.0e-19)
    monitor_prob: float = 0.8
    bandwidth_hz: float = 1.0e6
    noise_psd: float = 1.0e-12
    rayleigh_o: float = 1.0
    time_budget: float = 8.0
    energy_budget: float = 75.0


def gen_scenario(seed: int, u_count: int = 6, e_count: int = 2,
                 area_side: float = 800.0,
                 defaults: GenDefaults | None = None) -> Scenario:
    """Generate a scenario as a pure function of (seed, arguments).

    Draw order (fixed for reproducibility): server position, device
    positions, eavesdropper positions, then per compute node cpu_hz,
    cycles_per_bit, energy_coeff.
    """
    if u_count < 2:
        raise ValueError("u_count must be at least 2")
    if e_count < 0:
        raise ValueError("e_count must be nonnegative")
    d = defaults or GenDefaults()
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    def draw_pos():
        xy = rng.uniform(0.0, area_side, size=2)
        return Position(float(xy[0]), float(xy[1]))

    server_pos = draw_pos()
    device_pos = [draw_pos() for _ in range(u_count)]
    eave_pos = [draw_pos() for _ in range(e_count)]

    lo, hi = d.cycles_per_bit_range
    log_lo, log_hi = math.log(lo), math.log(hi)
    e_lo, e_hi = d.energy_coeff_range
    elog_lo, elog_hi = math.log(e_lo), math.log(e_hi)

    def draw_compute(pos: Position) -> Device:
        cpu = float(rng.uniform(*d.cpu_hz_range))
        omega = float(np.exp(rng.uniform(log_lo, log_hi)))
        theta = float(np.exp(rng.uniform(elog_lo, elog_hi)))
        return Device(pos, cpu, omega, theta)

    server = draw_compute(server_pos)
    devices = tuple(draw_compute(p) for p in device_pos)
    eaves = tuple(Eavesdropper(p, d.monitor_prob) for p in eave_pos)
    return Scenario(
        devices=devices,
        server=server,
        eavesdroppers=eaves,
        bandwidth_hz=d.bandwidth_hz,
        noise_psd=d.noise_psd,
        rayleigh_o=d.rayleigh_o,
        area_side=area_side,
        time_budget=d.time_budget,
        energy_budget=d.energy_budget,
    )
