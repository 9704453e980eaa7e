import numpy as np
import pytest

from splitjam.icm import ICM, ICMConfig, intrinsic_reward
from splitjam.nn import autodiff as ad


@pytest.fixture()
def icm():
    cfg = ICMConfig(state_dim=8, action_count=10, feature_dim=6,
                    hidden_dim=12, gru_hidden=5)
    return ICM(cfg, np.random.default_rng(0))


def test_extract_outputs_bounded(icm):
    rng = np.random.default_rng(1)
    states = rng.standard_normal((1000, 8)) * 3
    feats = np.stack([icm.extract(s) for s in states[:50]])
    bulk = icm._extract_var(states).value
    assert (bulk >= 0).all() and (bulk <= 1).all()
    assert (feats >= 0).all() and (feats <= 1).all()


def test_extract_deterministic_and_separating(icm):
    rng = np.random.default_rng(2)
    s = rng.standard_normal(8)
    assert np.array_equal(icm.extract(s), icm.extract(s))
    states = rng.standard_normal((1000, 8))
    feats = icm._extract_var(states).value
    keys = {tuple(np.round(f, 12)) for f in feats}
    assert len(keys) == 1000


def test_intrinsic_reward_definition():
    assert intrinsic_reward(np.ones(4), np.ones(4)) == 0.0
    v = np.zeros(4)
    w = np.zeros(4)
    w[0] = 1.0
    assert intrinsic_reward(v, w) == 0.5
    # Worst case for [0,1] features is dim / 2.
    assert intrinsic_reward(np.zeros(6), np.ones(6)) == 3.0


def test_curiosity_bounded_by_feature_dim(icm):
    rng = np.random.default_rng(3)
    for _ in range(50):
        r = icm.curiosity(rng.standard_normal(8), int(rng.integers(10)),
                          rng.standard_normal(8))
        assert 0.0 <= r <= icm.cfg.feature_dim / 2.0


def test_predict_action_dist_valid(icm):
    rng = np.random.default_rng(4)
    p = icm.predict_action_dist(rng.random(6), rng.random(6))
    assert p.shape == (10,)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert (p >= 0).all()


def test_predict_action_dist_uniform_at_zero_head(icm):
    head = [n for n in icm.store.names() if n.startswith("inv.3")]
    for name in head:
        icm.store[name].value[...] = 0.0
        icm.store[name].version += 1
    rng = np.random.default_rng(5)
    p = icm.predict_action_dist(rng.random(6), rng.random(6))
    assert np.allclose(p, 0.1, atol=1e-12)


def test_predict_next_feature_shape_and_determinism(icm):
    rng = np.random.default_rng(6)
    phi = rng.random(6)
    a = icm.predict_next_feature(phi, 3)
    b = icm.predict_next_feature(phi, 3)
    assert a.shape == (6,)
    assert np.array_equal(a, b)
    assert (a >= 0).all() and (a <= 1).all()


def test_inverse_loss_zero_when_confident(icm):
    # Saturate the inverse head toward action 0: the cross entropy of the
    # correct label collapses to ~0.
    bias = icm.store["inv.3.b"]
    w = icm.store["inv.3.w"]
    w.value[...] = 0.0
    w.version += 1
    bias.value[...] = -60.0
    bias.value[0] = 60.0
    bias.version += 1
    rng = np.random.default_rng(7)
    states = rng.standard_normal((4, 8))
    nexts = rng.standard_normal((4, 8))
    loss = icm._inverse_loss(states, np.zeros(4, dtype=np.intp), nexts)
    assert float(loss.value) == pytest.approx(0.0, abs=1e-9)


def test_combined_loss_is_forward_plus_weighted_inverse(icm):
    rng = np.random.default_rng(8)
    states = rng.standard_normal((5, 8))
    acts = rng.integers(0, 10, size=5)
    nexts = rng.standard_normal((5, 8))
    l_f = icm._forward_loss(states, acts, nexts, extractor_grad=True)
    l_i = icm._inverse_loss(states, acts, nexts)
    l_e = ad.add(l_f, ad.scale(l_i, icm.cfg.upsilon))
    assert float(l_e.value) == pytest.approx(
        float(l_f.value) + icm.cfg.upsilon * float(l_i.value), rel=1e-12)


def test_update_returns_finite_losses_and_changes_params(icm):
    rng = np.random.default_rng(9)
    states = rng.standard_normal((16, 8))
    acts = rng.integers(0, 10, size=16)
    nexts = rng.standard_normal((16, 8))
    before = {k: v.copy() for k, v in icm.store.state_arrays().items()}
    l_i, l_f, l_e = icm.update(states, acts, nexts)
    assert np.isfinite([l_i, l_f, l_e]).all()
    moved = [k for k, v in icm.store.state_arrays().items()
             if not np.array_equal(before[k], v)]
    assert any(k.startswith("ext") for k in moved)
    assert any(k.startswith("fwd") for k in moved)
    assert any(k.startswith("inv") for k in moved)


def test_forward_model_training_smoke():
    # 500 updates on a fixed transition set cut the prediction error by 10x.
    # A small inverse-loss weight keeps the extractor (the prediction
    # target) from churning under the double extractor update.
    cfg = ICMConfig(state_dim=6, action_count=8, feature_dim=5,
                    hidden_dim=16, gru_hidden=6, eta_forward=1e-2,
                    eta_inverse=1e-2, eta_extractor=1e-2, upsilon=2.0)
    icm = ICM(cfg, np.random.default_rng(10))
    rng = np.random.default_rng(11)
    states = rng.standard_normal((32, 6))
    acts = rng.integers(0, 8, size=32)
    nexts = states + 0.5 * np.eye(6)[acts % 6]

    def forward_error():
        return float(icm._forward_loss(states, acts, nexts,
                                       extractor_grad=False).value)

    start = forward_error()
    for _ in range(500):
        icm.update(states, acts, nexts)
    assert forward_error() <= start / 10.0


def test_inverse_model_recovers_actions():
    # Deterministic transitions: argmax of the inverse model matches the
    # true action on at least 90 percent of the training set.
    cfg = ICMConfig(state_dim=6, action_count=6, feature_dim=8,
                    hidden_dim=24, gru_hidden=8, eta_forward=3e-3,
                    eta_inverse=3e-3, eta_extractor=3e-3, upsilon=5.0)
    icm = ICM(cfg, np.random.default_rng(12))
    rng = np.random.default_rng(13)
    states = rng.standard_normal((48, 6))
    acts = np.arange(48) % 6
    nexts = states + 0.8 * np.eye(6)[acts]
    for _ in range(800):
        icm.update(states, acts, nexts)
    phi = icm._extract_var(states).value
    phi_next = icm._extract_var(nexts).value
    hits = 0
    for i in range(48):
        p = icm.predict_action_dist(phi[i], phi_next[i])
        hits += int(np.argmax(p) == acts[i])
    assert hits >= int(0.9 * 48)


def test_extractor_update_mode_switch():
    cfg = ICMConfig(state_dim=5, action_count=4, feature_dim=4,
                    hidden_dim=8, gru_hidden=4,
                    extractor_update="combined_only")
    icm = ICM(cfg, np.random.default_rng(14))
    rng = np.random.default_rng(15)
    states = rng.standard_normal((8, 5))
    acts = rng.integers(0, 4, size=8)
    nexts = rng.standard_normal((8, 5))
    icm.update(states, acts, nexts)  # must run cleanly
    with pytest.raises(ValueError):
        ICMConfig(state_dim=5, action_count=4, extractor_update="nope")
