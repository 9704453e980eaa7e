"""Minimal differentiable substrate for the actor, critic, and curiosity
networks: float64 arrays, reverse-mode gradients, dense/residual/GRU blocks,
masked softmax, cross-attention, and optimizers."""

from . import autodiff
from .autodiff import Param, Var, backward
from .checkpoint import load_arrays, save_arrays
from .layers import (NetSpec, ParamStore, cross_attention, init_cross_attention,
                     init_net, net_forward, softmax)
from .optim import adam_step, sgd_step, step, zero_grads

__all__ = [
    "autodiff", "Param", "Var", "backward", "load_arrays", "save_arrays",
    "NetSpec", "ParamStore", "cross_attention", "init_cross_attention",
    "init_net", "net_forward", "softmax", "adam_step", "sgd_step", "step",
    "zero_grads",
]
