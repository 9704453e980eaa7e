"""Layered model descriptions and their partition into sequential segments.

A :class:`ModelSpec` records, per layer, the parameter size, the size of the
activation crossing the boundary after that layer, and the flop coefficients
used by the cost model.  A :class:`SplitPlan` tiles the layer list into
contiguous segments; the boundary-gradient size at a cut equals the boundary
activation size there (gradients have the shape of the activations they
differentiate).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonMonotoneCuts


@dataclass(frozen=True)
class LayerSpec:
    """One layer: sizes in bits, per-layer flop coefficients, leak weight.

    ``fwd_flop_coeff`` / ``bwd_flop_coeff`` are the per-layer contributions
    to a segment's compute coefficient; the cost model treats
    ``cycles_per_bit * coeff * out_bits * param_bits`` as a cycle count, so
    the coefficients carry units of cycles per bit squared per cycles/bit.
    """

    param_bits: float
    boundary_activation_bits: float
    boundary_gradient_bits: float
    fwd_flop_coeff: float
    bwd_flop_coeff: float
    sensitivity_weight: float = 1.0

    def __post_init__(self):
        for name in ("param_bits", "boundary_activation_bits",
                     "boundary_gradient_bits", "fwd_flop_coeff",
                     "bwd_flop_coeff"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not np.isfinite(self.sensitivity_weight) or self.sensitivity_weight < 0:
            raise ValueError("sensitivity_weight must be finite and nonnegative")


@dataclass(frozen=True)
class ModelSpec:
    layers: tuple[LayerSpec, ...]
    input_bits: float

    @property
    def layer_count(self) -> int:
        return len(self.layers)

    @property
    def total_dim_bits(self) -> float:
        return sum(layer.param_bits for layer in self.layers)

    def boundary_bits(self, boundary: int) -> float:
        """Activation size at the boundary before layer ``boundary``.

        Boundary 0 is the model input; boundary k is the output of layer
        k-1.
        """
        if boundary == 0:
            return self.input_bits
        return self.layers[boundary - 1].boundary_activation_bits


@dataclass(frozen=True)
class Segment:
    """A contiguous run of layers [start, end) with aggregated sizes."""

    start: int
    end: int
    param_bits: float
    out_bits: float
    grad_in_bits: float
    fwd_flop_coeff: float
    bwd_flop_coeff: float
    sensitivity_weight: float


@dataclass(frozen=True)
class SplitPlan:
    cuts: tuple[int, ...]
    segments: tuple[Segment, ...]

    @property
    def segment_count(self) -> int:
        return len(self.segments)


def segment_from_range(model: ModelSpec, start: int, end: int) -> Segment:
    """Aggregate layers [start, end) into one segment."""
    members = model.layers[start:end]
    return Segment(
        start=start,
        end=end,
        param_bits=sum(m.param_bits for m in members),
        out_bits=members[-1].boundary_activation_bits,
        grad_in_bits=model.boundary_bits(start),
        fwd_flop_coeff=sum(m.fwd_flop_coeff for m in members),
        bwd_flop_coeff=sum(m.bwd_flop_coeff for m in members),
        sensitivity_weight=float(np.mean([m.sensitivity_weight for m in members])),
    )


def split_at(model: ModelSpec, cuts) -> SplitPlan:
    """Partition the model at the given strictly increasing cut indices.

    ``cuts=[2, 5]`` on an 8-layer model yields segments spanning layers
    [0,2), [2,5), [5,8).  An empty cut list produces the identity partition.
    """
    cuts = tuple(int(c) for c in cuts)
    bounds = (0,) + cuts + (model.layer_count,)
    for lo, hi in zip(bounds, bounds[1:]):
        if hi <= lo:
            raise NonMonotoneCuts(f"cuts {cuts} are not strictly increasing "
                                  f"inside (0, {model.layer_count})")
    segments = tuple(segment_from_range(model, lo, hi)
                     for lo, hi in zip(bounds, bounds[1:]))
    return SplitPlan(cuts=cuts, segments=segments)


def validate_plan(plan: SplitPlan, model: ModelSpec) -> bool:
    """True iff the plan tiles the model exactly, in order, with no overlap."""
    if not plan.segments:
        return False
    expected_start = 0
    for seg in plan.segments:
        if seg.start != expected_start or seg.end <= seg.start:
            return False
        if seg.end > model.layer_count:
            return False
        reference = segment_from_range(model, seg.start, seg.end)
        if (seg.param_bits != reference.param_bits
                or seg.out_bits != reference.out_bits
                or seg.grad_in_bits != reference.grad_in_bits):
            return False
        expected_start = seg.end
    return expected_start == model.layer_count


_PROFILES = ("uniform", "pyramid", "fullscale")


def make_model(layer_count: int, size_profile: str = "uniform",
               seed: int = 0) -> ModelSpec:
    """Build a synthetic layered model.

    Profiles:

    * ``uniform`` — every layer identical: 1e6 parameter bits, 1e4-bit
      boundary activations, flop coefficients sized so that desk-scale
      episodes fit comfortably inside the default 8 s / 75 J budgets.
    * ``pyramid`` — randomized layer sizes with strictly decreasing
      boundary activation sizes.
    * ``fullscale`` — flop coefficients sized so a typical two-layer
      segment costs 1-2e9 coefficient-times-bits-squared, the
      simulation-parameter magnitude; such plans deliberately blow the
      desk-scale time budget and exist to exercise over-budget detection.

    ``layer_count`` must be at least 1; callers planning an S-way split
    need ``layer_count >= S``.
    """
    if layer_count < 1:
        raise ValueError("layer_count must be at least 1")
    if size_profile not in _PROFILES:
        raise ValueError(f"unknown size_profile {size_profile!r}; "
                         f"choose from {_PROFILES}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x51]))

    layers = []
    if size_profile == "uniform":
        for _ in range(layer_count):
            layers.append(LayerSpec(
                param_bits=1.0e6,
                boundary_activation_bits=1.0e4,
                boundary_gradient_bits=1.0e4,
                fwd_flop_coeff=2.0e-7,
                bwd_flop_coeff=2.0e-7,
            ))
        input_bits = 1.0e4
    elif size_profile == "pyramid":
        act = 2.0e4
        input_bits = act
        for _ in range(layer_count):
            act *= 0.8
            layers.append(LayerSpec(
                param_bits=float(rng.uniform(5.0e5, 1.5e6)),
                boundary_activation_bits=act,
                boundary_gradient_bits=act,
                fwd_flop_coeff=float(rng.uniform(1.0e-7, 3.0e-7)),
                bwd_flop_coeff=float(rng.uniform(1.0e-7, 3.0e-7)),
            ))
    else:  # fullscale
        for _ in range(layer_count):
            act = 1.0e5
            layers.append(LayerSpec(
                param_bits=1.0e6,
                boundary_activation_bits=act,
                boundary_gradient_bits=act,
                fwd_flop_coeff=float(rng.uniform(3.0e-3, 5.0e-3)),
                bwd_flop_coeff=float(rng.uniform(3.0e-3, 5.0e-3)),
            ))
        input_bits = 1.0e5
    return ModelSpec(layers=tuple(layers), input_bits=input_bits)
