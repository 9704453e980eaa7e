"""splitjam: a deterministic simulator and RL toolkit for decoy-protected
multi-hop split learning over wireless networks.

Subsystems: network topology and channels (:mod:`splitjam.topology`),
layered models and split plans (:mod:`splitjam.slmodel`), delay and energy
accounting (:mod:`splitjam.costmodel`), eavesdropper capture and leakage
(:mod:`splitjam.eavesdrop`), closed-form transmit powers
(:mod:`splitjam.powerstar`), an executable split-training engine
(:mod:`splitjam.splitnn`), the scheduling MDP (:mod:`splitjam.env`), a
differentiable substrate (:mod:`splitjam.nn`), intrinsic curiosity
(:mod:`splitjam.icm`), the policy stack (:mod:`splitjam.agent`), and the
validation suite plus CLI (:mod:`splitjam.validate`, :mod:`splitjam.cli`).
"""

__version__ = "0.1.0"

from . import (agent, config, costmodel, eavesdrop, env, errors, icm, nn,
               powerstar, slmodel, splitnn, topology, validate)

__all__ = [
    "agent", "config", "costmodel", "eavesdrop", "env", "errors", "icm",
    "nn", "powerstar", "slmodel", "splitnn", "topology", "validate",
    "__version__",
]
