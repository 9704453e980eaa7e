import numpy as np
import pytest

from splitjam.env import EnvConfig, SplitEnv
from splitjam.slmodel import make_model
from splitjam.topology import gen_scenario


def tiny_env_factory(seed: int) -> SplitEnv:
    """A 3-device, 1-eavesdropper, 3-segment setup with a small action
    space; fast enough for learning-dynamics tests."""
    scn = gen_scenario(seed, u_count=3, e_count=1)
    model = make_model(4, "uniform", seed)
    return SplitEnv(scn, model, EnvConfig(segment_count=3), seed)
