"""Flat key-value config files shared by scenarios, models, and experiments.

Format: one ``key = value`` per line, ``#`` comments, values are numbers,
quoted strings, or bracketed numeric arrays.  Records (devices, layers) are
stored as parallel arrays.  Writers emit keys in a fixed order, so files
round-trip byte-identically.  The README documents every field.
"""

from __future__ import annotations

from .slmodel import LayerSpec, ModelSpec
from .topology import Device, Eavesdropper, Position, Scenario


def _format_value(value) -> str:
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(repr(float(v)) for v in value) + "]"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def dump_mapping(mapping: dict) -> str:
    lines = [f"{key} = {_format_value(value)}" for key, value in mapping.items()]
    return "\n".join(lines) + "\n"


def _parse_value(text: str):
    text = text.strip()
    if text.startswith('"') and text.endswith('"'):
        return text[1:-1]
    if text.startswith("["):
        if not text.endswith("]"):
            raise ValueError(f"unterminated array: {text!r}")
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [float(part) for part in inner.split(",")]
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_mapping(text: str) -> dict:
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        mapping[key.strip()] = _parse_value(value)
    return mapping


def write_config(mapping: dict, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_mapping(mapping))


def read_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_mapping(fh.read())


# -- scenario ---------------------------------------------------------------

def scenario_to_mapping(scn: Scenario) -> dict:
    return {
        "area_side": scn.area_side,
        "bandwidth_hz": scn.bandwidth_hz,
        "noise_psd": scn.noise_psd,
        "rayleigh_o": scn.rayleigh_o,
        "time_budget": scn.time_budget,
        "energy_budget": scn.energy_budget,
        "server_x": scn.server.position.x,
        "server_y": scn.server.position.y,
        "server_cpu_hz": scn.server.cpu_hz,
        "server_cycles_per_bit": scn.server.cycles_per_bit,
        "server_energy_coeff": scn.server.energy_coeff,
        "device_x": [d.position.x for d in scn.devices],
        "device_y": [d.position.y for d in scn.devices],
        "device_cpu_hz": [d.cpu_hz for d in scn.devices],
        "device_cycles_per_bit": [d.cycles_per_bit for d in scn.devices],
        "device_energy_coeff": [d.energy_coeff for d in scn.devices],
        "eave_x": [e.position.x for e in scn.eavesdroppers],
        "eave_y": [e.position.y for e in scn.eavesdroppers],
        "eave_monitor_prob": [e.monitor_prob for e in scn.eavesdroppers],
    }


def mapping_to_scenario(mapping: dict) -> Scenario:
    devices = tuple(
        Device(Position(x, y), cpu, omega, theta)
        for x, y, cpu, omega, theta in zip(
            mapping["device_x"], mapping["device_y"],
            mapping["device_cpu_hz"], mapping["device_cycles_per_bit"],
            mapping["device_energy_coeff"]))
    eaves = tuple(
        Eavesdropper(Position(x, y), q)
        for x, y, q in zip(mapping["eave_x"], mapping["eave_y"],
                           mapping["eave_monitor_prob"]))
    server = Device(Position(mapping["server_x"], mapping["server_y"]),
                    mapping["server_cpu_hz"],
                    mapping["server_cycles_per_bit"],
                    mapping["server_energy_coeff"])
    return Scenario(
        devices=devices, server=server, eavesdroppers=eaves,
        bandwidth_hz=float(mapping["bandwidth_hz"]),
        noise_psd=float(mapping["noise_psd"]),
        rayleigh_o=float(mapping["rayleigh_o"]),
        area_side=float(mapping["area_side"]),
        time_budget=float(mapping["time_budget"]),
        energy_budget=float(mapping["energy_budget"]),
    )


# -- layered model ------------------------------------------------------------

def model_to_mapping(model: ModelSpec) -> dict:
    return {
        "input_bits": model.input_bits,
        "layer_param_bits": [l.param_bits for l in model.layers],
        "layer_activation_bits": [l.boundary_activation_bits
                                  for l in model.layers],
        "layer_gradient_bits": [l.boundary_gradient_bits
                                for l in model.layers],
        "layer_fwd_flop_coeff": [l.fwd_flop_coeff for l in model.layers],
        "layer_bwd_flop_coeff": [l.bwd_flop_coeff for l in model.layers],
        "layer_sensitivity": [l.sensitivity_weight for l in model.layers],
    }


def mapping_to_model(mapping: dict) -> ModelSpec:
    layers = tuple(
        LayerSpec(p, a, g, ff, bf, w)
        for p, a, g, ff, bf, w in zip(
            mapping["layer_param_bits"], mapping["layer_activation_bits"],
            mapping["layer_gradient_bits"], mapping["layer_fwd_flop_coeff"],
            mapping["layer_bwd_flop_coeff"], mapping["layer_sensitivity"]))
    return ModelSpec(layers=layers, input_bits=float(mapping["input_bits"]))
