"""The scheduling MDP: one episode lays out a full split-training iteration
over 2S-1 steps.

Step 1 picks the first trainer and its sub-model; steps 2..S pick each next
receiver, its sub-model, the deceiver set, and transmit powers (step S is
forced to the server with the remaining layers); steps S+1..2S-1 replay the
chain in reverse for the gradient hops, with only deceivers and powers left
to choose.  Invalid combinations are excluded by a boolean mask over a flat
discrete action space.

Rewards are the negated leaked bits of the step's hop, normalized by twice
the sum of all boundary activation sizes (an upper bound on any plan's
total payload, so each per-eavesdropper term lies in [0, 1]), minus unit
penalties when the step starts with an exhausted energy or time budget.
Budgets may go negative; episodes always run the full 2S-1 steps.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np

from . import costmodel, eavesdrop, topology
from .costmodel import DeceiverAssignment, StepCosts, TransmissionSpec
from .errors import DeadEnd, InvalidAction
from .slmodel import ModelSpec, Segment, SplitPlan, segment_from_range, split_at
from .topology import NodeId, NodeKind, Scenario, SERVER, device


@dataclass(frozen=True)
class EnvConfig:
    segment_count: int = 4
    power_levels: tuple[float, ...] = (0.05, 0.1, 0.2, 0.4)
    max_deceivers: int = 2
    omega_energy: float = 1.0
    omega_time: float = 1.0
    observe_eavesdroppers: bool = True

    def __post_init__(self):
        if self.segment_count < 2:
            raise ValueError("segment_count must be at least 2")
        if any(p < 0 for p in self.power_levels):
            raise ValueError("power levels must be nonnegative")


@dataclass(frozen=True)
class Action:
    """Decoded action: the flat id expanded into its named fields.

    ``power_assignment`` lists one level index per transmitting node
    (transmitter first, then each deceiver); deceivers in one action share
    a level, which keeps the flat space small without losing the
    transmit-versus-deceive power trade-off.  ``backward_receiver`` is
    derived from the step index, never enumerated.
    """

    receiver_choice: int            # 0 = server/none, else 1-based device
    cut_size: int
    deceiver_set: tuple[int, ...]   # 0-based device indices
    power_assignment: tuple[int, ...]
    backward_receiver: int


@dataclass(frozen=True)
class EnvState:
    remaining_energy: float
    remaining_time: float
    assignment_vec: tuple[int, ...]   # per device: 0 or 1-based segment
    chain: tuple[int, ...]            # device index per assigned segment
    cut_sizes: tuple[int, ...]
    step_idx: int

    @property
    def layers_assigned(self) -> int:
        return sum(self.cut_sizes)


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    extrinsic_reward: float
    leakage_bits: float
    ledger_delta: tuple[float, float]
    done: bool
    info: dict


class ActionTable:
    """Flat enumeration of (receiver, cut size, deceiver subset, powers).

    Enumeration order is receiver-major, then cut size, then deceiver
    subset (empty, singletons, then pairs in lexicographic order), then
    power levels (transmitter level major, shared deceiver level minor;
    empty subsets enumerate only deceiver level 0).
    """

    def __init__(self, device_count: int, layer_count: int,
                 segment_count: int, cfg: EnvConfig):
        self.device_count = device_count
        self.layer_count = layer_count
        self.segment_count = segment_count
        self.cut_max = layer_count - segment_count + 1
        self.levels = cfg.power_levels
        subsets = [()]
        subsets += [(i,) for i in range(device_count)]
        if cfg.max_deceivers >= 2:
            subsets += [(i, j) for i in range(device_count)
                        for j in range(i + 1, device_count)]
        n_lvl = len(self.levels)
        rows = []
        for u in range(device_count + 1):
            for cut in range(self.cut_max + 1):
                for sub in subsets:
                    dec_lvls = range(n_lvl) if sub else (0,)
                    for tx_lvl in range(n_lvl):
                        for dec_lvl in dec_lvls:
                            bits = 0
                            for d in sub:
                                bits |= 1 << d
                            rows.append((u, cut, bits, len(sub), tx_lvl,
                                         dec_lvl))
        arr = np.array(rows, dtype=np.int64)
        self.receiver = arr[:, 0]
        self.cut = arr[:, 1]
        self.dec_bits = arr[:, 2]
        self.dec_count = arr[:, 3]
        self.tx_level = arr[:, 4]
        self.dec_level = arr[:, 5]
        self.size = len(rows)

    def decode(self, action_id: int, step_idx: int) -> Action:
        u = int(self.receiver[action_id])
        cut = int(self.cut[action_id])
        bits = int(self.dec_bits[action_id])
        deceivers = tuple(d for d in range(self.device_count)
                          if bits >> d & 1)
        tx_lvl = int(self.tx_level[action_id])
        dec_lvl = int(self.dec_level[action_id])
        s = self.segment_count
        x = 2 * s - step_idx if step_idx > s else 0
        return Action(
            receiver_choice=u,
            cut_size=cut,
            deceiver_set=deceivers,
            power_assignment=(tx_lvl,) + (dec_lvl,) * len(deceivers),
            backward_receiver=x,
        )


class SplitEnv:
    """One scenario plus one layered model, stepped by flat action ids."""

    def __init__(self, scn: Scenario, model: ModelSpec, cfg: EnvConfig,
                 seed: int = 0, record_trace: bool = False):
        if cfg.segment_count - 1 > scn.device_count:
            raise ValueError("not enough devices for the requested chain")
        if model.layer_count < cfg.segment_count:
            raise ValueError("fewer layers than segments")
        self.scn = scn
        self.model = model
        self.cfg = cfg
        self.table = ActionTable(scn.device_count, model.layer_count,
                                 cfg.segment_count, cfg)
        self._rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE]))
        # Normalizer: twice the summed internal boundary sizes bounds any
        # plan's total forward-plus-backward payload.
        acts = [layer.boundary_activation_bits
                for layer in model.layers[:-1]]
        self.leak_normalizer = 2.0 * sum(acts)
        max_w = max(layer.sensitivity_weight for layer in model.layers)
        self.delta_max_norm = max_w * max(acts) / self.leak_normalizer
        self.reward_lower_bound = -(scn.eavesdropper_count
                                    * self.delta_max_norm
                                    + cfg.omega_energy + cfg.omega_time)
        self._diag = math.hypot(scn.area_side, scn.area_side)
        self._segments: list[Segment] = []
        self._entries: list[StepCosts] = []
        self._transmissions: list[TransmissionSpec] = []
        self.last_plan: SplitPlan | None = None
        self.invalid_action_count = 0
        self.record_trace = record_trace
        self.trace_log: list[dict] = []
        self._episode_counter = -1

    @property
    def episode_length(self) -> int:
        return 2 * self.cfg.segment_count - 1

    @property
    def action_count(self) -> int:
        return self.table.size

    # -- episode control --------------------------------------------------

    def reset(self, seed: int | None = None) -> EnvState:
        if seed is not None:
            self._rng = np.random.default_rng(
                np.random.SeedSequence([seed, 0xE]))
        self._segments = []
        self._entries = []
        self._transmissions = []
        self.last_plan = None
        self._episode_counter += 1
        return EnvState(
            remaining_energy=self.scn.energy_budget,
            remaining_time=self.scn.time_budget,
            assignment_vec=(0,) * self.scn.device_count,
            chain=(),
            cut_sizes=(),
            step_idx=1,
        )

    def ledger(self) -> costmodel.CostLedger:
        return costmodel.CostLedger(list(self._entries))

    def transmissions(self) -> list[TransmissionSpec]:
        return list(self._transmissions)

    # -- transmitter/receiver bookkeeping ----------------------------------

    def _hop_endpoints(self, state: EnvState):
        """(tx NodeId, transmitter segment index 0-based) of the pending hop."""
        n, s = state.step_idx, self.cfg.segment_count
        if n == 1:
            return None, None
        if n <= s:
            return device(state.chain[n - 2]), n - 2
        j = 2 * s - n + 1  # 1-based transmitter segment
        tx = SERVER if j == s else device(state.chain[j - 1])
        return tx, j - 1

    def transmitter_onehot_index(self, state: EnvState) -> int:
        """0 for none or the server, else 1-based device index."""
        tx, _ = self._hop_endpoints(state)
        if tx is None or tx.kind is NodeKind.SERVER:
            return 0
        return tx.index + 1

    # -- mask ---------------------------------------------------------------

    def action_mask(self, state: EnvState) -> np.ndarray:
        t = self.table
        n, s = state.step_idx, self.cfg.segment_count
        u_count = self.scn.device_count
        if n > self.episode_length:
            raise ValueError("episode is over")
        remaining = self.model.layer_count - state.layers_assigned

        if n == 1:
            valid = ((t.receiver >= 1) & (t.cut >= 1)
                     & (t.cut <= remaining - (s - 1))
                     & (t.dec_count == 0) & (t.tx_level == 0))
        elif n < s:
            assigned_bits = 0
            for d in state.chain:
                assigned_bits |= 1 << d
            tx_dev = state.chain[n - 2]
            rx_shift = np.maximum(t.receiver - 1, 0)
            rx_bit_clear = np.where(t.receiver >= 1,
                                    ((t.dec_bits >> rx_shift) & 1) == 0,
                                    False)
            valid = ((t.receiver >= 1)
                     & (((assigned_bits >> rx_shift) & 1) == 0)
                     & (t.cut >= 1) & (t.cut <= remaining - (s - n))
                     & (((t.dec_bits >> tx_dev) & 1) == 0)
                     & rx_bit_clear)
        elif n == s:
            tx_dev = state.chain[n - 2]
            valid = ((t.receiver == 0) & (t.cut == remaining)
                     & (((t.dec_bits >> tx_dev) & 1) == 0))
        else:
            tx, tx_seg = self._hop_endpoints(state)
            rx_dev = state.chain[tx_seg - 1]
            valid = ((t.receiver == 0) & (t.cut == 0)
                     & (((t.dec_bits >> rx_dev) & 1) == 0))
            if tx.kind is NodeKind.DEVICE:
                valid &= ((t.dec_bits >> tx.index) & 1) == 0
        if not valid.any():
            raise DeadEnd(f"no valid action at step {n}")
        return valid

    # -- stepping -----------------------------------------------------------

    def step(self, state: EnvState, action_id: int) -> StepOutcome:
        mask = self.action_mask(state)
        if not mask[action_id]:
            self.invalid_action_count += 1
            raise InvalidAction(f"action {action_id} invalid at step "
                                f"{state.step_idx}")
        act = self.table.decode(action_id, state.step_idx)
        n, s = state.step_idx, self.cfg.segment_count
        scn = self.scn

        leaked = 0.0
        outcomes = []
        hop = None
        if n == 1:
            dev_idx = act.receiver_choice - 1
            self._segments.append(
                segment_from_range(self.model, 0, act.cut_size))
            entry = StepCosts()
            assignment = list(state.assignment_vec)
            assignment[dev_idx] = 1
            next_state = replace(
                state,
                assignment_vec=tuple(assignment),
                chain=(dev_idx,),
                cut_sizes=(act.cut_size,),
            )
            reward = 0.0
        else:
            tx_node, tx_seg = self._hop_endpoints(state)
            levels = self.cfg.power_levels
            tx_power = levels[act.power_assignment[0]]
            if n <= s:
                rx_node = SERVER if n == s else device(act.receiver_choice - 1)
                payload = self._segments[n - 2].out_bits
                delta_seg = self._segments[n - 2]
            else:
                rx_node = device(state.chain[tx_seg - 1])
                payload = self._segments[tx_seg].grad_in_bits
                delta_seg = self._segments[tx_seg]
            deceivers = tuple(
                DeceiverAssignment(device(d), levels[lvl])
                for d, lvl in zip(act.deceiver_set, act.power_assignment[1:]))
            hop = TransmissionSpec(tx=tx_node, rx=rx_node,
                                   payload_bits=payload, tx_power=tx_power,
                                   deceivers=deceivers)
            self._transmissions.append(hop)
            delta_bits = eavesdrop.delta(hop, delta_seg)
            for e in range(scn.eavesdropper_count):
                out = eavesdrop.sample_capture(hop, e, scn, self._rng,
                                               delta_bits=delta_bits)
                outcomes.append(out)
                leaked += out.leaked_bits

            t_hop = costmodel.tx_time(payload, costmodel.data_rate(hop, scn))
            e_tx, e_dec = costmodel.hop_energies(hop, t_hop)
            if n <= s:
                # Transmitter computes its output, then sends it.
                tx_seg_obj = self._segments[n - 2]
                tx_rec = scn.compute_record(tx_node)
                t_fwd, _ = costmodel.compute_times(tx_seg_obj, tx_rec)
                entry = StepCosts(
                    t_tx=t_hop, t_fwd=t_fwd,
                    e_compute=costmodel.compute_energy(tx_seg_obj, tx_rec),
                    e_tx=e_tx, e_deceive=e_dec)
                new_seg = segment_from_range(self.model,
                                             state.layers_assigned,
                                             state.layers_assigned
                                             + act.cut_size)
                self._segments.append(new_seg)
                assignment = list(state.assignment_vec)
                if n < s:
                    assignment[act.receiver_choice - 1] = n
                    chain = state.chain + (act.receiver_choice - 1,)
                else:
                    chain = state.chain
                next_state = replace(
                    state,
                    assignment_vec=tuple(assignment),
                    chain=chain,
                    cut_sizes=state.cut_sizes + (act.cut_size,),
                )
            else:
                # Transmitter updates its sub-model, then sends the
                # gradient; the server step also carries its forward
                # compute, the final step also the first trainer's update.
                tx_seg_obj = self._segments[tx_seg]
                tx_rec = scn.compute_record(tx_node)
                t_fwd = 0.0
                e_compute = 0.0
                if tx_seg == s - 1:
                    t_fwd = costmodel.compute_times(tx_seg_obj, tx_rec)[0]
                    e_compute = costmodel.compute_energy(tx_seg_obj, tx_rec)
                t_bwd = costmodel.compute_times(tx_seg_obj, tx_rec)[1]
                if tx_seg == 1:
                    first_seg = self._segments[0]
                    first_rec = scn.devices[state.chain[0]]
                    t_bwd = t_bwd + costmodel.compute_times(first_seg,
                                                            first_rec)[1]
                entry = StepCosts(t_tx=t_hop, t_fwd=t_fwd, t_bwd=t_bwd,
                                  e_compute=e_compute, e_tx=e_tx,
                                  e_deceive=e_dec)
                next_state = state

            penalty = 0.0
            if state.remaining_energy <= 0.0:
                penalty += self.cfg.omega_energy
            if state.remaining_time <= 0.0:
                penalty += self.cfg.omega_time
            reward = -(leaked / self.leak_normalizer) - penalty

        if not (self.reward_lower_bound - 1e-12 <= reward <= 0.0):
            raise AssertionError(f"step reward {reward} escapes the "
                                 f"[{self.reward_lower_bound}, 0] bound")

        self._entries.append(entry)
        next_state = replace(
            next_state,
            remaining_energy=state.remaining_energy - entry.energy,
            remaining_time=state.remaining_time - entry.time,
            step_idx=n + 1,
        )
        done = n == self.episode_length
        if n == s:
            cuts = np.cumsum(next_state.cut_sizes)[:-1]
            self.last_plan = split_at(self.model, cuts)
        info = {
            "captures": outcomes,
            "hop": hop,
            "penalty_energy": state.remaining_energy <= 0.0 and n > 1,
            "penalty_time": state.remaining_time <= 0.0 and n > 1,
        }
        if self.record_trace:
            self.trace_log.append({
                "episode": self._episode_counter,
                "step": n,
                "state_hash": hashlib.sha1(
                    self.encode_state(state).tobytes()).hexdigest()[:16],
                "action_id": int(action_id),
                "reward": reward,
                "leakage_bits": leaked,
                "time_spent": entry.time,
                "energy_spent": entry.energy,
            })
        return StepOutcome(next_state=next_state, extrinsic_reward=reward,
                           leakage_bits=leaked,
                           ledger_delta=(entry.time, entry.energy),
                           done=done, info=info)

    # -- encoding -----------------------------------------------------------

    def encode_state(self, state: EnvState) -> np.ndarray:
        """Fixed-order numeric encoding.

        Layout: remaining energy and time (relative to budgets), unassigned
        layer fraction, per-device assignment over S, one-hot transmitter
        (none/server first), transmitter-to-eavesdropper distances (zeroed
        when eavesdropper positions are hidden), transmitter-to-device
        distances, and the step fraction.  Distances are normalized by the
        area diagonal.  Length is 3U + E + 5.
        """
        scn, s = self.scn, self.cfg.segment_count
        u_count, e_count = scn.device_count, scn.eavesdropper_count
        parts = [
            state.remaining_energy / scn.energy_budget,
            state.remaining_time / scn.time_budget,
            1.0 - state.layers_assigned / self.model.layer_count,
        ]
        parts.extend(a / s for a in state.assignment_vec)
        onehot = [0.0] * (u_count + 1)
        v = (self.transmitter_onehot_index(state)
             if state.step_idx <= self.episode_length else 0)
        onehot[v] = 1.0
        parts.extend(onehot)

        tx, _ = (self._hop_endpoints(state)
                 if state.step_idx <= self.episode_length else (None, None))
        if tx is None:
            parts.extend([0.0] * e_count)
            parts.extend([0.0] * u_count)
        else:
            pos = scn.position_of(tx)
            if self.cfg.observe_eavesdroppers:
                parts.extend(topology.distance(pos, e.position) / self._diag
                             for e in scn.eavesdroppers)
            else:
                parts.extend([0.0] * e_count)
            parts.extend(topology.distance(pos, d.position) / self._diag
                         for d in scn.devices)
        parts.append(state.step_idx / self.episode_length)
        return np.array(parts, dtype=np.float64)

    @property
    def state_dim(self) -> int:
        return 3 * self.scn.device_count + self.scn.eavesdropper_count + 5
