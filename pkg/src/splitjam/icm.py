"""Intrinsic curiosity: feature extractor, forward and inverse dynamics
models, the curiosity bonus, and the three-loss update.

The extractor squashes features into [0, 1] with a terminal sigmoid and the
forward model does the same for its prediction, so the curiosity bonus
``0.5 * ||phi - phi_hat||^2`` is bounded by ``feature_dim / 2``; the reward
boundedness argument for critic convergence rests on exactly this.

The update runs three sequential steps per batch: (i) inverse loss updates
the inverse model and the extractor, (ii) forward loss updates the forward
model, (iii) the combined loss ``L_F + upsilon * L_I`` updates the extractor
again.  Step (iii) on top of step (i) applies the inverse-loss gradient to
the extractor twice per round; that double application is deliberate, and
``extractor_update="combined_only"`` switches to a single combined update
for anyone who prefers not to double-apply it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import autodiff as ad
from .nn.layers import NetSpec, ParamStore, init_net, net_forward
from .nn.optim import step as opt_step
from .nn.optim import zero_grads


@dataclass(frozen=True)
class ICMConfig:
    state_dim: int
    action_count: int
    feature_dim: int = 32
    hidden_dim: int = 64
    gru_hidden: int = 32
    upsilon: float = 6.0
    eta_inverse: float = 1e-3
    eta_forward: float = 1e-3
    eta_extractor: float = 1e-3
    optimizer: str = "adam"
    extractor_update: str = "double"  # "double" or "combined_only"

    def __post_init__(self):
        if min(self.eta_inverse, self.eta_forward, self.eta_extractor) <= 0:
            raise ValueError("learning rates must be positive")
        if self.extractor_update not in ("double", "combined_only"):
            raise ValueError("extractor_update must be 'double' or "
                             "'combined_only'")


def intrinsic_reward(phi_next: np.ndarray, phi_pred: np.ndarray) -> float:
    """Half the squared L2 distance between true and predicted features."""
    diff = np.asarray(phi_next) - np.asarray(phi_pred)
    return 0.5 * float(np.dot(diff.ravel(), diff.ravel()))


class ICM:
    """The curiosity stack around one discrete-action environment."""

    def __init__(self, cfg: ICMConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.store = ParamStore()
        h, f, g = cfg.hidden_dim, cfg.feature_dim, cfg.gru_hidden
        self.extractor_spec = NetSpec((
            ("dense", h, "tanh"),
            ("residual",),
            ("dense", f, "sigmoid"),
        ))
        # Forward and inverse dynamics share one architecture:
        # dense -> residual -> GRU -> head.
        self.forward_spec = NetSpec((
            ("dense", h, "tanh"),
            ("residual",),
            ("gru", g),
            ("dense", f, "sigmoid"),
        ))
        self.inverse_spec = NetSpec((
            ("dense", h, "tanh"),
            ("residual",),
            ("gru", g),
            ("dense", cfg.action_count, "linear"),
        ))
        init_net(self.extractor_spec, self.store, "ext", cfg.state_dim, rng)
        init_net(self.forward_spec, self.store, "fwd",
                 f + cfg.action_count, rng)
        init_net(self.inverse_spec, self.store, "inv", 2 * f, rng)

    # -- forward passes -------------------------------------------------

    def _extract_var(self, states: np.ndarray) -> ad.Var:
        out, _ = net_forward(self.extractor_spec, self.store, "ext",
                             np.atleast_2d(states))
        return out

    def extract(self, state: np.ndarray) -> np.ndarray:
        """Feature vector of one encoded state (components in [0, 1])."""
        return self._extract_var(state).value[0]

    def _forward_var(self, phi: ad.Var, action_ids: np.ndarray,
                     h0=None) -> ad.Var:
        onehot = np.zeros((phi.value.shape[0], self.cfg.action_count))
        onehot[np.arange(len(action_ids)), action_ids] = 1.0
        x = ad.concat_cols([phi, ad.as_var(onehot)])
        out, _ = net_forward(self.forward_spec, self.store, "fwd", x,
                             recurrent_state=h0)
        return out

    def predict_next_feature(self, phi: np.ndarray, action_id: int,
                             h0: np.ndarray | None = None) -> np.ndarray:
        var = self._forward_var(ad.as_var(np.atleast_2d(phi)),
                                np.array([action_id]), h0)
        return var.value[0]

    def _inverse_var(self, phi: ad.Var, phi_next: ad.Var) -> ad.Var:
        x = ad.concat_cols([phi, phi_next])
        out, _ = net_forward(self.inverse_spec, self.store, "inv", x)
        return out

    def predict_action_dist(self, phi: np.ndarray,
                            phi_next: np.ndarray) -> np.ndarray:
        logits = self._inverse_var(ad.as_var(np.atleast_2d(phi)),
                                   ad.as_var(np.atleast_2d(phi_next)))
        probs = ad.masked_softmax(logits,
                                  np.ones(logits.value.shape, dtype=bool))
        return probs.value[0]

    def curiosity(self, state: np.ndarray, action_id: int,
                  next_state: np.ndarray,
                  h0: np.ndarray | None = None) -> float:
        """Curiosity bonus of one observed transition."""
        phi_next = self.extract(next_state)
        phi = self.extract(state)
        phi_pred = self.predict_next_feature(phi, action_id, h0)
        return intrinsic_reward(phi_next, phi_pred)

    # -- losses and the three-step update --------------------------------

    def _inverse_loss(self, states, action_ids, next_states) -> ad.Var:
        phi = self._extract_var(states)
        phi_next = self._extract_var(next_states)
        logits = self._inverse_var(phi, phi_next)
        probs = ad.masked_softmax(logits,
                                  np.ones(logits.value.shape, dtype=bool))
        picked = ad.gather_cols(probs, action_ids)
        return ad.scale(ad.mean_all(ad.log_clip(picked)), -1.0)

    def _forward_loss(self, states, action_ids, next_states,
                      extractor_grad: bool) -> ad.Var:
        phi = self._extract_var(states)
        phi_next = self._extract_var(next_states)
        if not extractor_grad:
            phi = ad.as_var(phi.value)
            phi_next = ad.as_var(phi_next.value)
        phi_pred = self._forward_var(phi, action_ids)
        diff = ad.sub(phi_pred, phi_next)
        return ad.scale(ad.mean_all(ad.sum_axis(ad.mul(diff, diff), axis=1)),
                        0.5)

    def update(self, states: np.ndarray, action_ids: np.ndarray,
               next_states: np.ndarray) -> tuple[float, float, float]:
        """Run the sequential three-loss update; returns (L_I, L_F, L_E).

        The GRU state inside the dynamics models starts from zero for each
        batch element; batches mix transitions from many points in time, so
        no episode context is carried here.
        """
        cfg = self.cfg
        states = np.atleast_2d(states)
        next_states = np.atleast_2d(next_states)
        action_ids = np.asarray(action_ids, dtype=np.intp)
        double_update = cfg.extractor_update == "double"

        l_i = self._inverse_loss(states, action_ids, next_states)
        l_i_value = float(l_i.value)
        if double_update:
            ad.backward(l_i)
            opt_step(self.store, cfg.eta_inverse,
                     self.store.params("inv") + self.store.params("ext"),
                     cfg.optimizer)
            self.store.zero_grads()
        else:
            ad.backward(l_i)
            opt_step(self.store, cfg.eta_inverse, self.store.params("inv"),
                     cfg.optimizer)
            self.store.zero_grads()

        l_f = self._forward_loss(states, action_ids, next_states,
                                 extractor_grad=False)
        l_f_value = float(l_f.value)
        ad.backward(l_f)
        opt_step(self.store, cfg.eta_forward, self.store.params("fwd"),
                 cfg.optimizer)
        self.store.zero_grads()

        # Combined loss, gradients applied to the extractor only.
        l_f2 = self._forward_loss(states, action_ids, next_states,
                                  extractor_grad=True)
        l_i2 = self._inverse_loss(states, action_ids, next_states)
        l_e = ad.add(l_f2, ad.scale(l_i2, cfg.upsilon))
        l_e_value = float(l_e.value)
        ad.backward(l_e)
        opt_step(self.store, cfg.eta_extractor, self.store.params("ext"),
                 cfg.optimizer)
        self.store.zero_grads()
        return l_i_value, l_f_value, l_e_value
