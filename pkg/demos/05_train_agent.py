"""Train the curiosity/cross-attention agent on a small setup.

Eighty episodes on a 3-device network, against the no-curiosity ablation,
printing reward and exploration curves side by side.  The full reference
experiment (6 devices, 200 episodes, 5 seeds) runs through the CLI:

    splitjam train --agent icmca --seeds 0,1,2,3,4 --out out/
"""

import numpy as np

from splitjam.agent import TrainConfig, train
from splitjam.env import EnvConfig, SplitEnv
from splitjam.slmodel import make_model
from splitjam.topology import gen_scenario


def factory(seed):
    scn = gen_scenario(seed, u_count=3, e_count=1)
    model = make_model(4, "uniform", seed)
    return SplitEnv(scn, model, EnvConfig(segment_count=3), seed)


episodes = 80
base_cfg = dict(episodes=episodes, seed=0, batch_size=16)
print("training curiosity agent...")
_, with_icm = train(factory, TrainConfig(**base_cfg))
print("training no-curiosity ablation...")
_, without = train(factory, TrainConfig(**base_cfg, no_icm=True))

print(f"\n{'episode':>8} {'reward(icm)':>12} {'reward(base)':>13} "
      f"{'states(icm)':>12} {'states(base)':>13}")
for i in range(0, episodes, 10):
    a, b = with_icm[i], without[i]
    print(f"{i:>8} {a['reward_extrinsic']:>12.3f} "
          f"{b['reward_extrinsic']:>13.3f} {a['distinct_states']:>12} "
          f"{b['distinct_states']:>13}")

last = slice(-10, None)
mean = lambda ms: float(np.mean([m["reward_extrinsic"] for m in ms[last]]))
print(f"\nfinal-10 mean extrinsic reward: {mean(with_icm):.3f} with "
      f"curiosity vs {mean(without):.3f} without")
print(f"distinct states after {episodes} episodes: "
      f"{with_icm[-1]['distinct_states']} vs {without[-1]['distinct_states']}")
