"""Minimal reverse-mode automatic differentiation over float64 arrays.

Every operation builds a node in an implicit tape; calling
:func:`backward` on an output accumulates exact gradients into the
parameters it depends on.  Parameters carry a version counter so a tape
built before an optimizer step cannot silently be replayed afterwards.
"""

from __future__ import annotations

import numpy as np


class Param:
    """A named learnable array with its gradient and optimizer moments."""

    __slots__ = ("name", "value", "grad", "m", "v", "version")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.m = None
        self.v = None
        self.version = 0

    def zero_grad(self):
        self.grad[...] = 0.0


class Var:
    """A tape node: an array value plus how to push gradients to parents."""

    __slots__ = ("value", "grad", "_parents", "_backward", "_param", "_version")

    def __init__(self, value, parents=(), backward=None, param: Param | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward
        self._param = param
        self._version = param.version if param is not None else 0

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def leaf(param: Param) -> Var:
    return Var(param.value, param=param)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Reduce a broadcast gradient back to the parent's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = Var(a.value + b.value, parents=(a, b))

    def backward():
        _accum(a, _unbroadcast(out.grad, a.value.shape))
        _accum(b, _unbroadcast(out.grad, b.value.shape))

    out._backward = backward
    return out


def sub(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = Var(a.value - b.value, parents=(a, b))

    def backward():
        _accum(a, _unbroadcast(out.grad, a.value.shape))
        _accum(b, _unbroadcast(-out.grad, b.value.shape))

    out._backward = backward
    return out


def mul(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = Var(a.value * b.value, parents=(a, b))

    def backward():
        _accum(a, _unbroadcast(out.grad * b.value, a.value.shape))
        _accum(b, _unbroadcast(out.grad * a.value, b.value.shape))

    out._backward = backward
    return out


def scale(a, c: float) -> Var:
    a = as_var(a)
    out = Var(a.value * c, parents=(a,))

    def backward():
        _accum(a, out.grad * c)

    out._backward = backward
    return out


def rsub_const(c: float, a) -> Var:
    """c - a, for gate complements like (1 - z)."""
    a = as_var(a)
    out = Var(c - a.value, parents=(a,))

    def backward():
        _accum(a, -out.grad)

    out._backward = backward
    return out


def matmul(a, b) -> Var:
    a, b = as_var(a), as_var(b)
    out = Var(a.value @ b.value, parents=(a, b))

    def backward():
        _accum(a, out.grad @ b.value.T)
        _accum(b, a.value.T @ out.grad)

    out._backward = backward
    return out


def tanh(a) -> Var:
    a = as_var(a)
    y = np.tanh(a.value)
    out = Var(y, parents=(a,))

    def backward():
        _accum(a, out.grad * (1.0 - y * y))

    out._backward = backward
    return out


def sigmoid(a) -> Var:
    a = as_var(a)
    y = 1.0 / (1.0 + np.exp(-a.value))
    out = Var(y, parents=(a,))

    def backward():
        _accum(a, out.grad * y * (1.0 - y))

    out._backward = backward
    return out


LOG_FLOOR = 1e-12


def log_clip(a, floor: float = LOG_FLOOR) -> Var:
    """log with the argument floored at ``floor`` to guard log(0)."""
    a = as_var(a)
    clipped = np.maximum(a.value, floor)
    out = Var(np.log(clipped), parents=(a,))

    def backward():
        _accum(a, out.grad / clipped)

    out._backward = backward
    return out


def sum_all(a) -> Var:
    a = as_var(a)
    out = Var(a.value.sum(), parents=(a,))

    def backward():
        _accum(a, np.full_like(a.value, 1.0) * out.grad)

    out._backward = backward
    return out


def mean_all(a) -> Var:
    a = as_var(a)
    n = a.value.size
    out = Var(a.value.mean(), parents=(a,))

    def backward():
        _accum(a, np.full_like(a.value, out.grad / n))

    out._backward = backward
    return out


def sum_axis(a, axis: int, keepdims: bool = False) -> Var:
    a = as_var(a)
    out = Var(a.value.sum(axis=axis, keepdims=keepdims), parents=(a,))

    def backward():
        g = out.grad
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.value.shape).copy())

    out._backward = backward
    return out


def concat_cols(parts: list) -> Var:
    parts = [as_var(p) for p in parts]
    out = Var(np.concatenate([p.value for p in parts], axis=1),
              parents=tuple(parts))
    widths = [p.value.shape[1] for p in parts]

    def backward():
        offset = 0
        for p, w in zip(parts, widths):
            _accum(p, out.grad[:, offset:offset + w])
            offset += w

    out._backward = backward
    return out


def take_rows(a, ids: np.ndarray) -> Var:
    """Select rows of a matrix; the embedding-style lookup."""
    a = as_var(a)
    ids = np.asarray(ids, dtype=np.intp)
    out = Var(a.value[ids], parents=(a,))

    def backward():
        g = np.zeros_like(a.value)
        np.add.at(g, ids, out.grad)
        _accum(a, g)

    out._backward = backward
    return out


def gather_cols(a, ids: np.ndarray) -> Var:
    """Per-row element pick: out[b] = a[b, ids[b]]."""
    a = as_var(a)
    ids = np.asarray(ids, dtype=np.intp)
    rows = np.arange(a.value.shape[0])
    out = Var(a.value[rows, ids], parents=(a,))

    def backward():
        g = np.zeros_like(a.value)
        g[rows, ids] = out.grad
        _accum(a, g)

    out._backward = backward
    return out


def masked_softmax(logits, mask: np.ndarray) -> Var:
    """Row-wise softmax with masked entries exactly zero.

    Stabilized by max subtraction over the unmasked support.  Every row
    must have at least one unmasked entry.
    """
    logits = as_var(logits)
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim == 1:
        mask = mask[None, :]
    if not mask.any(axis=1).all():
        raise ValueError("softmax over an all-masked row")
    shifted = np.where(mask, logits.value, -np.inf)
    shifted = shifted - shifted.max(axis=1, keepdims=True)
    exp = np.where(mask, np.exp(shifted), 0.0)
    probs = exp / exp.sum(axis=1, keepdims=True)
    out = Var(probs, parents=(logits,))

    def backward():
        g = out.grad
        inner = (g * probs).sum(axis=1, keepdims=True)
        _accum(logits, probs * (g - inner))

    out._backward = backward
    return out


def attention_combine(q, keys, values, valid: np.ndarray) -> Var:
    """Scaled dot-product attention of one query per sample over its keys.

    ``q`` is (B, d); ``keys``/``values`` are (B*I, d) with I keys per
    sample; ``valid`` is (B, I).  Rows with no valid key yield a zero
    output.
    """
    q, keys, values = as_var(q), as_var(keys), as_var(values)
    valid = np.asarray(valid, dtype=bool)
    b, d = q.value.shape
    i = valid.shape[1]
    k3 = keys.value.reshape(b, i, d)
    v3 = values.value.reshape(b, i, d)
    inv_sqrt = 1.0 / np.sqrt(d)
    scores = np.einsum("bd,bid->bi", q.value, k3) * inv_sqrt
    shifted = np.where(valid, scores, -np.inf)
    row_has = valid.any(axis=1)
    row_max = np.where(row_has, shifted.max(axis=1, initial=-np.inf), 0.0)
    exp = np.where(valid, np.exp(shifted - row_max[:, None]), 0.0)
    denom = exp.sum(axis=1)
    weights = np.where(row_has[:, None], exp / np.where(denom == 0.0, 1.0, denom)[:, None], 0.0)
    out_val = np.einsum("bi,bid->bd", weights, v3)
    out = Var(out_val, parents=(q, keys, values))

    def backward():
        g = out.grad
        d_v3 = weights[:, :, None] * g[:, None, :]
        d_w = np.einsum("bd,bid->bi", g, v3)
        inner = (d_w * weights).sum(axis=1, keepdims=True)
        d_scores = weights * (d_w - inner)
        d_q = np.einsum("bi,bid->bd", d_scores, k3) * inv_sqrt
        d_k3 = d_scores[:, :, None] * q.value[:, None, :] * inv_sqrt
        _accum(q, d_q)
        _accum(keys, d_k3.reshape(b * i, d))
        _accum(values, d_v3.reshape(b * i, d))

    out._backward = backward
    return out


def _accum(var: Var, grad: np.ndarray):
    if var.grad is None:
        var.grad = np.array(grad, dtype=np.float64)
    else:
        var.grad += grad


def backward(root: Var, output_grad=None):
    """Accumulate gradients of ``root`` into every reachable parameter."""
    topo = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))

    root.grad = (np.ones_like(root.value) if output_grad is None
                 else np.asarray(output_grad, dtype=np.float64))
    for node in reversed(topo):
        if node.grad is None:
            continue
        if node._backward is not None:
            node._backward()
        if node._param is not None:
            _flush_param(node)
    return root


def _flush_param(node: Var):
    param = node._param
    if node._version != param.version:
        raise RuntimeError(f"tape for {param.name!r} is stale: the parameter "
                           "was updated after the forward pass")
    param.grad += node.grad
    node.grad = None
