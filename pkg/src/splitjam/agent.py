"""The ICM-CA policy stack: cross-attention actor, value critic, replay
buffer, the per-step training loop, and a tabular Q-learning baseline.

The actor sees a combined state from cross-attention over the last few
observed state-action pairs (the history rolls across episode boundaries;
only the very start of training is zero-padded).  One value critic is
trained on the squared one-step Bellman residual, with no twin networks or
target copies; the actor loss is the advantage-weighted log-probability
minus an entropy term.  Every metric is a pure function of (seed, config).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .env import SplitEnv
from .icm import ICM, ICMConfig, intrinsic_reward
from .nn import autodiff as ad
from .nn.layers import NetSpec, ParamStore, cross_attention, init_cross_attention, init_net
from .nn.optim import step as opt_step


def total_reward(r_extrinsic: float, r_curiosity: float, zeta: float) -> float:
    if r_curiosity < 0:
        raise ValueError("curiosity reward must be nonnegative")
    return r_extrinsic + zeta * r_curiosity


def advantage(r: float, v_s: float, v_next: float, gamma: float,
              done: bool) -> float:
    """One-step advantage; the bootstrap term drops at terminal states."""
    if done:
        return r - v_s
    return r + gamma * v_next - v_s


def quantize_state(enc: np.ndarray, levels: int = 8) -> tuple:
    """Bucket each encoded component into ``levels`` bins and hash as a tuple."""
    clipped = np.clip(enc, 0.0, 1.0 - 1e-9)
    return tuple((clipped * levels).astype(np.int64).tolist())


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action_id: int
    reward: float
    next_state: np.ndarray
    done: bool
    mask: np.ndarray            # packed bits over the action space
    hist_states: np.ndarray     # (I, state_dim), most recent first
    hist_actions: np.ndarray    # (I,)
    hist_valid: np.ndarray      # (I,)


class ReplayBuffer:
    """Fixed-capacity ring with FIFO eviction and seeded uniform sampling."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items: list[Experience] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, exp: Experience):
        if len(self._items) < self.capacity:
            self._items.append(exp)
        else:
            self._items[self._next] = exp
            self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 200
    seed: int = 0
    gamma: float = 0.99
    alpha: float = 0.05
    zeta: float = 0.3
    history_len: int = 4
    eta_actor: float = 1e-4
    eta_critic: float = 3e-4
    batch_size: int = 64
    buffer_capacity: int = 10_000
    no_icm: bool = False
    no_ca: bool = False
    optimizer: str = "adam"
    attn_dim: int = 64
    actor_hidden: int = 128
    critic_hidden: int = 64
    feature_dim: int = 32
    icm_hidden: int = 64
    gru_hidden: int = 32
    upsilon: float = 6.0
    eta_icm: float = 1e-3
    extractor_update: str = "double"
    # Q baseline knobs.
    q_learning_rate: float = 0.2
    q_epsilon_start: float = 1.0
    q_epsilon_final: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.history_len < 1:
            raise ValueError("history_len must be positive")


class ICMCAAgent:
    """Actor-critic with optional curiosity and cross-attention state fusion."""

    def __init__(self, env: SplitEnv, cfg: TrainConfig):
        self.env = env
        self.cfg = cfg
        self.state_dim = env.state_dim
        self.action_count = env.action_count
        seq = np.random.SeedSequence(cfg.seed)
        init_agent, init_icm, action_seed, buffer_seed = seq.spawn(4)
        init_rng = np.random.default_rng(init_agent)
        self.action_rng = np.random.default_rng(action_seed)
        self.buffer_rng = np.random.default_rng(buffer_seed)

        self.store = ParamStore()
        if not cfg.no_ca:
            init_cross_attention(self.store, "att", self.state_dim,
                                 self.action_count, cfg.attn_dim, init_rng)
            actor_in = cfg.attn_dim
        else:
            actor_in = self.state_dim
        self.actor_spec = NetSpec((
            ("dense", cfg.actor_hidden, "tanh"),
            ("dense", self.action_count, "linear"),
        ))
        init_net(self.actor_spec, self.store, "actor", actor_in, init_rng)
        self.critic_spec = NetSpec((
            ("dense", cfg.critic_hidden, "tanh"),
            ("dense", cfg.critic_hidden, "tanh"),
            ("dense", 1, "linear"),
        ))
        init_net(self.critic_spec, self.store, "critic", self.state_dim,
                 init_rng)

        self.icm: ICM | None = None
        if not cfg.no_icm:
            self.icm = ICM(ICMConfig(
                state_dim=self.state_dim,
                action_count=self.action_count,
                feature_dim=cfg.feature_dim,
                hidden_dim=cfg.icm_hidden,
                gru_hidden=cfg.gru_hidden,
                upsilon=cfg.upsilon,
                eta_inverse=cfg.eta_icm,
                eta_forward=cfg.eta_icm,
                eta_extractor=cfg.eta_icm,
                optimizer=cfg.optimizer,
                extractor_update=cfg.extractor_update,
            ), np.random.default_rng(init_icm))

    # -- policy -----------------------------------------------------------

    def _actor_input(self, states: np.ndarray, hist_states: np.ndarray,
                     hist_actions: np.ndarray, hist_valid: np.ndarray):
        if self.cfg.no_ca:
            return ad.as_var(states)
        return cross_attention(self.store, "att", states, hist_states,
                               hist_actions, hist_valid)

    def _policy_var(self, states, hist_states, hist_actions, hist_valid,
                    masks) -> ad.Var:
        x = self._actor_input(states, hist_states, hist_actions, hist_valid)
        h = ad.tanh(ad.add(ad.matmul(x, self.store.leaf("actor.0.w")),
                           self.store.leaf("actor.0.b")))
        logits = ad.add(ad.matmul(h, self.store.leaf("actor.1.w")),
                        self.store.leaf("actor.1.b"))
        return ad.masked_softmax(logits, masks)

    def policy(self, state_enc: np.ndarray, hist_states: np.ndarray,
               hist_actions: np.ndarray, hist_valid: np.ndarray,
               mask: np.ndarray) -> np.ndarray:
        """Action distribution at one state; invalid actions get exactly 0."""
        var = self._policy_var(state_enc[None, :], hist_states[None, ...],
                               hist_actions[None, :], hist_valid[None, :],
                               mask[None, :])
        return var.value[0]

    def select_action(self, probs: np.ndarray) -> int:
        u = self.action_rng.random()
        cdf = np.cumsum(probs)
        return int(np.searchsorted(cdf, u * cdf[-1], side="right"))

    def critic_value(self, state_enc: np.ndarray) -> float:
        var = self._critic_var(np.atleast_2d(state_enc))
        return float(var.value[0, 0])

    def _critic_var(self, states: np.ndarray) -> ad.Var:
        x = ad.as_var(states)
        for i, (kind, *rest) in enumerate(self.critic_spec.blocks):
            w = self.store.leaf(f"critic.{i}.w")
            b = self.store.leaf(f"critic.{i}.b")
            x = ad.add(ad.matmul(x, w), b)
            if rest[-1] == "tanh":
                x = ad.tanh(x)
        return x

    # -- updates ----------------------------------------------------------

    def update(self, batch: list[Experience]) -> tuple[float, float]:
        """One critic step then one actor step on a sampled batch."""
        cfg = self.cfg
        states = np.stack([e.state for e in batch])
        next_states = np.stack([e.next_state for e in batch])
        actions = np.array([e.action_id for e in batch], dtype=np.intp)
        rewards = np.array([e.reward for e in batch])[:, None]
        cont = np.array([0.0 if e.done else 1.0 for e in batch])[:, None]
        masks = np.stack([np.unpackbits(e.mask)[:self.action_count].astype(bool)
                          for e in batch])
        hist_states = np.stack([e.hist_states for e in batch])
        hist_actions = np.stack([e.hist_actions for e in batch])
        hist_valid = np.stack([e.hist_valid for e in batch])

        # Critic: squared one-step Bellman residual, gradient through both
        # value terms.
        v_s = self._critic_var(states)
        v_n = self._critic_var(next_states)
        residual = ad.sub(ad.add(ad.as_var(rewards),
                                 ad.mul(v_n, ad.as_var(cfg.gamma * cont))),
                          v_s)
        l_c = ad.mean_all(ad.mul(residual, residual))
        l_c_value = float(l_c.value)
        ad.backward(l_c)
        opt_step(self.store, cfg.eta_critic, self.store.params("critic"),
                 cfg.optimizer)
        self.store.zero_grads()

        # Advantage from the updated critic, constant for the actor.
        v_s_new = self._critic_var(states).value
        v_n_new = self._critic_var(next_states).value
        y = rewards + cfg.gamma * cont * v_n_new - v_s_new

        probs = self._policy_var(states, hist_states, hist_actions,
                                 hist_valid, masks)
        log_pa = ad.log_clip(ad.gather_cols(probs, actions))
        ent = ad.scale(ad.sum_axis(ad.mul(probs, ad.log_clip(probs)), axis=1),
                       -1.0)
        inner = ad.sub(ad.mul(log_pa, ad.as_var(y[:, 0])),
                       ad.scale(ent, cfg.alpha))
        l_a = ad.scale(ad.mean_all(inner), -1.0)
        l_a_value = float(l_a.value)
        ad.backward(l_a)
        actor_params = self.store.params("actor")
        if not cfg.no_ca:
            actor_params = actor_params + self.store.params("att")
        opt_step(self.store, cfg.eta_actor, actor_params, cfg.optimizer)
        self.store.zero_grads()
        return l_c_value, l_a_value

    # -- persistence --------------------------------------------------------

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {"agent." + k: v for k, v in self.store.state_arrays().items()}
        if self.icm is not None:
            arrays.update({"icm." + k: v
                           for k, v in self.icm.store.state_arrays().items()})
        return arrays

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        self.store.load_arrays({k[len("agent."):]: v for k, v in arrays.items()
                                if k.startswith("agent.")})
        if self.icm is not None:
            self.icm.store.load_arrays({k[len("icm."):]: v
                                        for k, v in arrays.items()
                                        if k.startswith("icm.")})


class _History:
    """Rolling window of the last I (state, action) pairs, newest first."""

    def __init__(self, length: int, state_dim: int):
        self.length = length
        self.state_dim = state_dim
        self._pairs = deque(maxlen=length)

    def push(self, state_enc: np.ndarray, action_id: int):
        self._pairs.appendleft((state_enc, action_id))

    def arrays(self):
        states = np.zeros((self.length, self.state_dim))
        actions = np.zeros(self.length, dtype=np.intp)
        valid = np.zeros(self.length, dtype=bool)
        for i, (s, a) in enumerate(self._pairs):
            states[i] = s
            actions[i] = a
            valid[i] = True
        return states, actions, valid


def _pack_mask(mask: np.ndarray) -> np.ndarray:
    return np.packbits(mask.astype(np.uint8))


def train(env_factory, cfg: TrainConfig):
    """Run the full training loop; returns (agent, per-episode metrics).

    ``env_factory(seed)`` must build a fresh environment; the same seed
    yields byte-identical metrics.  Each step stores the experience, then
    runs the curiosity update, the critic update, and the actor update on a
    uniformly sampled batch (once the buffer holds one batch).
    """
    env: SplitEnv = env_factory(cfg.seed)
    agent = ICMCAAgent(env, cfg)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    history = _History(cfg.history_len, env.state_dim)
    zeta = 0.0 if cfg.no_icm else cfg.zeta
    r_c_max = 0.0 if cfg.no_icm else cfg.feature_dim / 2.0
    metrics = []
    seen_states: set = set()

    for episode in range(cfg.episodes):
        state = env.reset()
        ep_reward = 0.0
        ep_extrinsic = 0.0
        ep_leak = 0.0
        ep_violations = 0
        losses = {"l_i": 0.0, "l_f": 0.0, "l_e": 0.0, "l_c": 0.0, "l_a": 0.0}
        done = False
        while not done:
            enc = env.encode_state(state)
            seen_states.add(quantize_state(enc))
            mask = env.action_mask(state)
            h_states, h_actions, h_valid = history.arrays()
            probs = agent.policy(enc, h_states, h_actions, h_valid, mask)
            action_id = agent.select_action(probs)
            outcome = env.step(state, action_id)
            enc_next = env.encode_state(outcome.next_state)

            r_c = 0.0
            if agent.icm is not None:
                r_c = agent.icm.curiosity(enc, action_id, enc_next)
            reward = total_reward(outcome.extrinsic_reward, r_c, zeta)
            if not (env.reward_lower_bound - 1e-9 <= reward
                    <= zeta * r_c_max + 1e-9):
                raise AssertionError(f"total reward {reward} escapes its bound")

            buffer.push(Experience(
                state=enc, action_id=action_id, reward=reward,
                next_state=enc_next, done=outcome.done,
                mask=_pack_mask(mask), hist_states=h_states,
                hist_actions=h_actions, hist_valid=h_valid))
            history.push(enc, action_id)

            if len(buffer) >= cfg.batch_size:
                batch = buffer.sample(cfg.batch_size, agent.buffer_rng)
                if agent.icm is not None:
                    b_s = np.stack([e.state for e in batch])
                    b_a = np.array([e.action_id for e in batch],
                                   dtype=np.intp)
                    b_n = np.stack([e.next_state for e in batch])
                    l_i, l_f, l_e = agent.icm.update(b_s, b_a, b_n)
                    losses["l_i"], losses["l_f"], losses["l_e"] = l_i, l_f, l_e
                l_c, l_a = agent.update(batch)
                losses["l_c"], losses["l_a"] = l_c, l_a
                if not all(math.isfinite(v) for v in losses.values()):
                    raise FloatingPointError(f"non-finite loss at episode "
                                             f"{episode}: {losses}")

            ep_reward += reward
            ep_extrinsic += outcome.extrinsic_reward
            ep_leak += outcome.leakage_bits
            if outcome.info["penalty_energy"] or outcome.info["penalty_time"]:
                ep_violations += 1
            state = outcome.next_state
            done = outcome.done
        seen_states.add(quantize_state(env.encode_state(state)))

        metrics.append({
            "episode": episode,
            "reward_total": ep_reward,
            "reward_extrinsic": ep_extrinsic,
            "leakage_bits": ep_leak,
            "violations": ep_violations,
            "distinct_states": len(seen_states),
            **losses,
        })
    assert env.invalid_action_count == 0
    return agent, metrics


def run_random(env_factory, cfg: TrainConfig):
    """Uniform random masked policy; the fixed-policy control for sweeps."""
    env: SplitEnv = env_factory(cfg.seed)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    metrics = []
    seen_states: set = set()
    for episode in range(cfg.episodes):
        state = env.reset()
        ep_extrinsic = 0.0
        ep_leak = 0.0
        ep_violations = 0
        done = False
        while not done:
            enc = env.encode_state(state)
            seen_states.add(quantize_state(enc))
            mask = env.action_mask(state)
            valid_ids = np.flatnonzero(mask)
            action_id = int(valid_ids[rng.integers(len(valid_ids))])
            outcome = env.step(state, action_id)
            ep_extrinsic += outcome.extrinsic_reward
            ep_leak += outcome.leakage_bits
            if outcome.info["penalty_energy"] or outcome.info["penalty_time"]:
                ep_violations += 1
            state = outcome.next_state
            done = outcome.done
        seen_states.add(quantize_state(env.encode_state(state)))
        metrics.append({
            "episode": episode,
            "reward_total": ep_extrinsic,
            "reward_extrinsic": ep_extrinsic,
            "leakage_bits": ep_leak,
            "violations": ep_violations,
            "distinct_states": len(seen_states),
            "l_i": 0.0, "l_f": 0.0, "l_e": 0.0, "l_c": 0.0, "l_a": 0.0,
        })
    assert env.invalid_action_count == 0
    return None, metrics


def q_baseline_train(env_factory, cfg: TrainConfig):
    """Tabular Q-learning over quantized states with epsilon-greedy masking."""
    env: SplitEnv = env_factory(cfg.seed)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    q: dict = {}
    metrics = []
    seen_states: set = set()
    decay_span = max(1, int(cfg.episodes * 0.6))

    def q_get(key, a):
        return q.get((key, a), 0.0)

    def best(key, valid_ids):
        values = [q_get(key, a) for a in valid_ids]
        i = int(np.argmax(values))
        return valid_ids[i], values[i]

    for episode in range(cfg.episodes):
        eps = max(cfg.q_epsilon_final,
                  cfg.q_epsilon_start
                  - (cfg.q_epsilon_start - cfg.q_epsilon_final)
                  * episode / decay_span)
        state = env.reset()
        ep_extrinsic = 0.0
        ep_leak = 0.0
        ep_violations = 0
        done = False
        while not done:
            enc = env.encode_state(state)
            key = quantize_state(enc)
            seen_states.add(key)
            mask = env.action_mask(state)
            valid_ids = np.flatnonzero(mask).tolist()
            if rng.random() < eps:
                action_id = int(valid_ids[rng.integers(len(valid_ids))])
            else:
                action_id, _ = best(key, valid_ids)
            outcome = env.step(state, action_id)
            enc_next = env.encode_state(outcome.next_state)
            key_next = quantize_state(enc_next)
            if outcome.done:
                target = outcome.extrinsic_reward
            else:
                next_mask = env.action_mask(outcome.next_state)
                next_valid = np.flatnonzero(next_mask).tolist()
                _, v_next = best(key_next, next_valid)
                target = outcome.extrinsic_reward + cfg.gamma * v_next
            old = q_get(key, action_id)
            q[(key, action_id)] = old + cfg.q_learning_rate * (target - old)

            ep_extrinsic += outcome.extrinsic_reward
            ep_leak += outcome.leakage_bits
            if outcome.info["penalty_energy"] or outcome.info["penalty_time"]:
                ep_violations += 1
            state = outcome.next_state
            done = outcome.done
        seen_states.add(quantize_state(env.encode_state(state)))
        metrics.append({
            "episode": episode,
            "reward_total": ep_extrinsic,
            "reward_extrinsic": ep_extrinsic,
            "leakage_bits": ep_leak,
            "violations": ep_violations,
            "distinct_states": len(seen_states),
            "l_i": 0.0, "l_f": 0.0, "l_e": 0.0, "l_c": 0.0, "l_a": 0.0,
        })
    assert env.invalid_action_count == 0
    return q, metrics


def greedy_rollout(agent: ICMCAAgent, env: SplitEnv):
    """Argmax rollout of one episode; returns the per-step trace."""
    state = env.reset()
    history = _History(agent.cfg.history_len, env.state_dim)
    trace = []
    done = False
    while not done:
        enc = env.encode_state(state)
        mask = env.action_mask(state)
        h_states, h_actions, h_valid = history.arrays()
        probs = agent.policy(enc, h_states, h_actions, h_valid, mask)
        action_id = int(np.argmax(probs))
        outcome = env.step(state, action_id)
        trace.append((state, action_id, outcome))
        history.push(enc, action_id)
        state = outcome.next_state
        done = outcome.done
    return trace
