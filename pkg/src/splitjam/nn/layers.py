"""Network building blocks: dense layers, residual blocks, a GRU cell,
masked softmax heads, and single-query cross-attention over a history of
state-action pairs.

Parameters live in a :class:`ParamStore` under dotted names; every block is
a pair of functions, ``init_*`` (allocate parameters) and an apply function
that threads :class:`~splitjam.nn.autodiff.Var` nodes through the store.
Initialization is uniform with fan-in scaling 1/sqrt(fan_in).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Param, Var


class ParamStore:
    """Insertion-ordered mapping of parameter names to Param objects."""

    def __init__(self):
        self._params: dict[str, Param] = {}
        self.adam_t = 0

    def add(self, name: str, value: np.ndarray) -> Param:
        if name in self._params:
            raise ValueError(f"duplicate parameter {name!r}")
        p = Param(name, value)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Param:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def params(self, prefix: str | None = None) -> list[Param]:
        if prefix is None:
            return list(self._params.values())
        return [p for name, p in self._params.items()
                if name.startswith(prefix)]

    def leaf(self, name: str) -> Var:
        return ad.leaf(self._params[name])

    def zero_grads(self):
        for p in self._params.values():
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.value for name, p in self._params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        for name, p in self._params.items():
            if name not in arrays:
                raise KeyError(f"checkpoint missing parameter {name!r}")
            if arrays[name].shape != p.value.shape:
                raise ValueError(f"shape mismatch for {name!r}")
            p.value[...] = arrays[name]
            p.version += 1


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    scale = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-scale, scale, size=shape)


def init_dense(store: ParamStore, prefix: str, in_dim: int, out_dim: int,
               rng: np.random.Generator):
    store.add(prefix + ".w", _uniform(rng, in_dim, (in_dim, out_dim)))
    store.add(prefix + ".b", np.zeros(out_dim))


_ACTIVATIONS = {"tanh": ad.tanh, "sigmoid": ad.sigmoid, "linear": None}


def dense(store: ParamStore, prefix: str, x: Var,
          activation: str = "linear") -> Var:
    y = ad.add(ad.matmul(x, store.leaf(prefix + ".w")),
               store.leaf(prefix + ".b"))
    act = _ACTIVATIONS[activation]
    return y if act is None else act(y)


def init_residual(store: ParamStore, prefix: str, dim: int,
                  rng: np.random.Generator):
    init_dense(store, prefix + ".fc1", dim, dim, rng)
    init_dense(store, prefix + ".fc2", dim, dim, rng)


def residual(store: ParamStore, prefix: str, x: Var) -> Var:
    inner = dense(store, prefix + ".fc1", x, "tanh")
    return ad.add(x, dense(store, prefix + ".fc2", inner, "linear"))


def init_gru(store: ParamStore, prefix: str, in_dim: int, hidden: int,
             rng: np.random.Generator):
    for gate in ("z", "r", "h"):
        store.add(f"{prefix}.w{gate}", _uniform(rng, in_dim, (in_dim, hidden)))
        store.add(f"{prefix}.u{gate}", _uniform(rng, hidden, (hidden, hidden)))
        store.add(f"{prefix}.b{gate}", np.zeros(hidden))


def gru(store: ParamStore, prefix: str, x: Var, h: Var) -> Var:
    """One GRU step: h' = (1 - z) * h + z * candidate."""
    z = ad.sigmoid(ad.add(ad.add(ad.matmul(x, store.leaf(prefix + ".wz")),
                                 ad.matmul(h, store.leaf(prefix + ".uz"))),
                          store.leaf(prefix + ".bz")))
    r = ad.sigmoid(ad.add(ad.add(ad.matmul(x, store.leaf(prefix + ".wr")),
                                 ad.matmul(h, store.leaf(prefix + ".ur"))),
                          store.leaf(prefix + ".br")))
    cand = ad.tanh(ad.add(ad.add(ad.matmul(x, store.leaf(prefix + ".wh")),
                                 ad.matmul(ad.mul(r, h),
                                           store.leaf(prefix + ".uh"))),
                          store.leaf(prefix + ".bh")))
    return ad.add(ad.mul(ad.rsub_const(1.0, z), h), ad.mul(z, cand))


@dataclass(frozen=True)
class NetSpec:
    """Block list for a feed-forward body: each block is one of
    ("dense", out_dim, activation), ("residual",), ("gru", hidden)."""

    blocks: tuple[tuple, ...]


def init_net(spec: NetSpec, store: ParamStore, prefix: str, in_dim: int,
             rng: np.random.Generator) -> int:
    """Allocate a network's parameters; returns the output width."""
    dim = in_dim
    for i, block in enumerate(spec.blocks):
        name = f"{prefix}.{i}"
        if block[0] == "dense":
            init_dense(store, name, dim, block[1], rng)
            dim = block[1]
        elif block[0] == "residual":
            init_residual(store, name, dim, rng)
        elif block[0] == "gru":
            init_gru(store, name, dim, block[1], rng)
            dim = block[1]
        else:
            raise ValueError(f"unknown block kind {block[0]!r}")
    return dim


def net_forward(spec: NetSpec, store: ParamStore, prefix: str, x,
                recurrent_state: Var | np.ndarray | None = None):
    """Apply a network; returns (output Var, new recurrent state or None).

    The returned output doubles as the tape: call
    :func:`splitjam.nn.autodiff.backward` on it (or on a loss built from
    it).  Raises on non-finite outputs.
    """
    x = ad.as_var(x)
    new_state = None
    for i, block in enumerate(spec.blocks):
        name = f"{prefix}.{i}"
        if block[0] == "dense":
            x = dense(store, name, x, block[2])
        elif block[0] == "residual":
            x = residual(store, name, x)
        elif block[0] == "gru":
            hidden = block[1]
            if recurrent_state is None:
                h = ad.as_var(np.zeros((x.value.shape[0], hidden)))
            else:
                h = ad.as_var(recurrent_state)
            x = gru(store, name, x, h)
            new_state = x
    if not np.isfinite(x.value).all():
        raise FloatingPointError(f"non-finite output from network {prefix!r}")
    return x, new_state


def softmax(logits, mask: np.ndarray | None = None) -> Var:
    """Masked softmax; see :func:`splitjam.nn.autodiff.masked_softmax`."""
    logits = ad.as_var(logits)
    if mask is None:
        mask = np.ones(logits.value.shape, dtype=bool)
    return ad.masked_softmax(logits, mask)


def init_cross_attention(store: ParamStore, prefix: str, state_dim: int,
                         action_count: int, attn_dim: int,
                         rng: np.random.Generator):
    """Q/K/V projections over [state; one-hot action] pairs.

    Each projection is stored as a state part (state_dim x attn_dim) and an
    action part (action_count x attn_dim); projecting a pair equals one
    matrix over the concatenation, with the one-hot picking a row of the
    action part.
    """
    pair_dim = state_dim + action_count
    for side in ("q", "k", "v"):
        store.add(f"{prefix}.{side}s", _uniform(rng, pair_dim,
                                                (state_dim, attn_dim)))
        store.add(f"{prefix}.{side}a", _uniform(rng, pair_dim,
                                                (action_count, attn_dim)))


def cross_attention(store: ParamStore, prefix: str, states: np.ndarray,
                    hist_states: np.ndarray, hist_actions: np.ndarray,
                    hist_valid: np.ndarray) -> Var:
    """Combine each state with its history window into one vector.

    ``states`` is (B, state_dim); ``hist_states`` (B, I, state_dim);
    ``hist_actions`` (B, I) action ids; ``hist_valid`` (B, I) marks real
    (non-padding) pairs.  The current state forms the query (its action
    slot is empty, so only the state part of the query projection applies);
    keys and values come from the history pairs.  Samples with an entirely
    padded history get a zero vector.
    """
    b, i, ds = hist_states.shape
    if i == 0:
        raise ValueError("history length must be positive")
    flat_states = hist_states.reshape(b * i, ds)
    flat_actions = hist_actions.reshape(b * i)
    q = ad.matmul(ad.as_var(states), store.leaf(prefix + ".qs"))
    k = ad.add(ad.matmul(ad.as_var(flat_states), store.leaf(prefix + ".ks")),
               ad.take_rows(store.leaf(prefix + ".ka"), flat_actions))
    v = ad.add(ad.matmul(ad.as_var(flat_states), store.leaf(prefix + ".vs")),
               ad.take_rows(store.leaf(prefix + ".va"), flat_actions))
    return ad.attention_combine(q, k, v, hist_valid)
