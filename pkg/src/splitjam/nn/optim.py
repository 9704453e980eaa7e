"""Parameter updates: adaptive moments (default) and plain gradient descent."""

from __future__ import annotations

import numpy as np

from .layers import ParamStore


def adam_step(store: ParamStore, lr: float, params=None,
              betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
    """One adaptive-moment step over ``params`` (default: all in the store).

    Bias correction uses a per-store step counter shared by all groups.
    """
    if params is None:
        params = store.params()
    store.adam_t += 1
    b1, b2 = betas
    t = store.adam_t
    for p in params:
        if p.m is None:
            p.m = np.zeros_like(p.value)
            p.v = np.zeros_like(p.value)
        g = p.grad
        p.m = b1 * p.m + (1.0 - b1) * g
        p.v = b2 * p.v + (1.0 - b2) * (g * g)
        m_hat = p.m / (1.0 - b1 ** t)
        v_hat = p.v / (1.0 - b2 ** t)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + eps)
        p.version += 1


def sgd_step(store: ParamStore, lr: float, params=None):
    if params is None:
        params = store.params()
    for p in params:
        p.value -= lr * p.grad
        p.version += 1


def step(store: ParamStore, lr: float, params=None, optimizer: str = "adam"):
    if optimizer == "adam":
        adam_step(store, lr, params)
    elif optimizer == "sgd":
        sgd_step(store, lr, params)
    else:
        raise ValueError(f"unknown optimizer {optimizer!r}")


def zero_grads(store: ParamStore, params=None):
    for p in (params if params is not None else store.params()):
        p.zero_grad()
