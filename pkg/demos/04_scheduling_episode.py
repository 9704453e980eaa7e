"""One scheduling episode, narrated.

Rolls a random masked policy through the 2S-1 step MDP, printing each hop,
its leakage, and the running time/energy ledger against the budgets.
"""

import numpy as np

from splitjam.slmodel import validate_plan
from splitjam.validate import reference_env_factory

env = reference_env_factory(seed=5)
rng = np.random.default_rng(5)
state = env.reset()
print(f"budgets: {state.remaining_time} s, {state.remaining_energy} J; "
      f"episode length {env.episode_length} steps; "
      f"{env.action_count} flat actions")

done = False
while not done:
    mask = env.action_mask(state)
    valid = np.flatnonzero(mask)
    action_id = int(valid[rng.integers(len(valid))])
    act = env.table.decode(action_id, state.step_idx)
    out = env.step(state, action_id)
    hop = out.info["hop"]
    if hop is None:
        desc = (f"device {act.receiver_choice - 1} starts the chain with "
                f"{act.cut_size} layers")
    else:
        desc = (f"{hop.tx.kind.value}{hop.tx.index} -> "
                f"{hop.rx.kind.value}{hop.rx.index}, "
                f"{hop.payload_bits:.0f} b at {hop.tx_power} W, "
                f"deceivers {[(d.node.index, d.power) for d in hop.deceivers]}")
    print(f"step {state.step_idx}: {desc}")
    print(f"   reward {out.extrinsic_reward:+.4f}  leaked "
          f"{out.leakage_bits:.0f} b  spent {out.ledger_delta[0]*1e3:.1f} ms "
          f"/ {out.ledger_delta[1]:.2f} J")
    state = out.next_state
    done = out.done

ledger = env.ledger()
print(f"\nepisode totals: {ledger.time_spent:.3f} s of "
      f"{env.scn.time_budget} s, {ledger.energy_spent:.2f} J of "
      f"{env.scn.energy_budget} J")
print(f"final plan valid: {validate_plan(env.last_plan, env.model)}; "
      f"segment sizes {[s.end - s.start for s in env.last_plan.segments]} "
      "layers")
