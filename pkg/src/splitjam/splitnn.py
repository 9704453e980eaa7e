"""Executable toy split-training engine.

A dense tanh network is partitioned into contiguous segments; activations
flow forward along the chain and loss gradients flow backward, exactly as a
real multi-hop deployment would exchange them.  Splitting is semantically
invisible: the chained protocol reproduces the unsplit network's loss and
parameter gradients.  Everything runs in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .slmodel import LayerSpec, ModelSpec

BITS_PER_ELEMENT = 64  # float64 payloads


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray    # (out_dim,)
    activation: str     # "tanh" or "linear"

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class DenseSegment:
    layers: list[DenseLayer]

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim


def make_chain(layer_dims, seed: int, final_linear: bool = True) -> list[DenseLayer]:
    """Random dense layers for the given dimension chain.

    ``layer_dims = [in, h1, ..., out]`` yields ``len(layer_dims) - 1``
    layers, tanh everywhere except (optionally) the last.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD]))
    layers = []
    n = len(layer_dims) - 1
    for i in range(n):
        fan_in = layer_dims[i]
        scale = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-scale, scale, size=(layer_dims[i + 1], fan_in))
        b = rng.uniform(-scale, scale, size=layer_dims[i + 1])
        act = "linear" if (final_linear and i == n - 1) else "tanh"
        layers.append(DenseLayer(weight=w, bias=b, activation=act))
    return layers


def split_layers(layers: list[DenseLayer], cuts) -> list[DenseSegment]:
    """Group layers into segments at the given strictly increasing cuts."""
    bounds = [0] + list(cuts) + [len(layers)]
    for lo, hi in zip(bounds, bounds[1:]):
        if hi <= lo:
            raise ValueError(f"invalid cuts {cuts}")
    return [DenseSegment(layers[lo:hi]) for lo, hi in zip(bounds, bounds[1:])]


def _layer_forward(layer: DenseLayer, x: np.ndarray):
    pre = x @ layer.weight.T + layer.bias
    if layer.activation == "tanh":
        return np.tanh(pre)
    return pre


def forward_chain(segments: list[DenseSegment], batch: np.ndarray):
    """Run the chained forward pass.

    Returns the per-segment boundary outputs ``[z_1, ..., z_S]`` and a cache
    of per-layer inputs/outputs for the backward pass.
    """
    if batch.shape[1] != segments[0].in_dim:
        raise ValueError(f"batch dim {batch.shape[1]} does not match "
                         f"segment input dim {segments[0].in_dim}")
    outputs = []
    cache = []
    z = batch
    for seg in segments:
        if z.shape[1] != seg.in_dim:
            raise ValueError("boundary dimensions do not match")
        seg_cache = []
        for layer in seg.layers:
            out = _layer_forward(layer, z)
            seg_cache.append((z, out))
            z = out
        outputs.append(z)
        cache.append(seg_cache)
    return outputs, cache


def compute_loss(z_last: np.ndarray, labels: np.ndarray) -> float:
    """Mean squared error over every entry of the batch."""
    if z_last.shape != labels.shape:
        raise ValueError("prediction and label shapes differ")
    diff = z_last - labels
    return float(np.mean(diff * diff))


def loss_grad(z_last: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return 2.0 * (z_last - labels) / z_last.size


def backward_chain(segments: list[DenseSegment], cache, out_grad: np.ndarray):
    """Propagate gradients server-to-source through the chain.

    Returns per-segment parameter gradients (lists of (dW, db)) and the
    boundary gradients each segment would transmit upstream; entry k is the
    gradient with respect to segment k's input.
    """
    if cache is None or len(cache) != len(segments):
        raise ValueError("forward cache missing or inconsistent")
    param_grads = [None] * len(segments)
    boundary_grads = [None] * len(segments)
    g = out_grad
    for k in range(len(segments) - 1, -1, -1):
        seg = segments[k]
        seg_cache = cache[k]
        grads = [None] * len(seg.layers)
        for i in range(len(seg.layers) - 1, -1, -1):
            layer = seg.layers[i]
            x, out = seg_cache[i]
            if layer.activation == "tanh":
                d_pre = g * (1.0 - out * out)
            else:
                d_pre = g
            grads[i] = (d_pre.T @ x, d_pre.sum(axis=0))
            g = d_pre @ layer.weight
        param_grads[k] = grads
        boundary_grads[k] = g
    return param_grads, boundary_grads


def apply_updates(segments: list[DenseSegment], param_grads, lr: float):
    """In-order SGD step; mutates and returns the segments."""
    for seg, grads in zip(segments, param_grads):
        for layer, (dw, db) in zip(seg.layers, grads):
            layer.weight -= lr * dw
            layer.bias -= lr * db
    return segments


def monolithic_oracle(layers: list[DenseLayer], batch: np.ndarray,
                      labels: np.ndarray):
    """Unsplit forward/backward reference, written straight-line.

    Returns the loss and a flat list of (dW, db) per layer.  Used to check
    that the chained protocol is invisible.
    """
    activations = [batch]
    x = batch
    for layer in layers:
        pre = x @ layer.weight.T + layer.bias
        x = np.tanh(pre) if layer.activation == "tanh" else pre
        activations.append(x)
    diff = x - labels
    loss = float(np.mean(diff * diff))
    g = 2.0 * diff / x.size
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        out = activations[i + 1]
        if layer.activation == "tanh":
            d_pre = g * (1.0 - out * out)
        else:
            d_pre = g
        grads[i] = (d_pre.T @ activations[i], d_pre.sum(axis=0))
        g = d_pre @ layer.weight
    return loss, grads


def spec_from_chain(layers: list[DenseLayer], input_dim: int) -> ModelSpec:
    """Describe a real dense chain as a layered model spec.

    Sizes use ``BITS_PER_ELEMENT`` bits per tensor element, so a split
    plan's boundary sizes map back onto actual message dimensions.
    """
    specs = []
    for layer in layers:
        specs.append(LayerSpec(
            param_bits=float((layer.weight.size + layer.bias.size)
                             * BITS_PER_ELEMENT),
            boundary_activation_bits=float(layer.out_dim * BITS_PER_ELEMENT),
            boundary_gradient_bits=float(layer.out_dim * BITS_PER_ELEMENT),
            fwd_flop_coeff=0.0,
            bwd_flop_coeff=0.0,
        ))
    return ModelSpec(layers=tuple(specs),
                     input_bits=float(input_dim * BITS_PER_ELEMENT))
