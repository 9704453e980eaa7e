import numpy as np
import pytest

from splitjam.nn import autodiff as ad
from splitjam.nn.checkpoint import load_arrays, save_arrays
from splitjam.nn.layers import (NetSpec, ParamStore, cross_attention,
                                init_cross_attention, init_net, net_forward,
                                softmax)
from splitjam.nn.optim import adam_step, sgd_step, zero_grads


def test_softmax_uniform_logits():
    probs = softmax(np.zeros((1, 5))).value
    assert np.allclose(probs, 0.2)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_softmax_single_unmasked():
    mask = np.array([[False, True, False]])
    probs = softmax(np.array([[5.0, -2.0, 1.0]]), mask).value
    assert probs[0, 1] == 1.0
    assert probs[0, 0] == 0.0 and probs[0, 2] == 0.0


def test_softmax_reference_values():
    probs = softmax(np.array([[1.0, 2.0, 3.0]])).value[0]
    expect = np.array([0.09003057317038046, 0.24472847105479767,
                       0.6652409557748219])
    assert np.allclose(probs, expect, rtol=1e-12)


def test_softmax_all_masked_raises():
    with pytest.raises(ValueError):
        softmax(np.zeros((1, 3)), np.zeros((1, 3), dtype=bool))


def test_softmax_masked_rows_sum_to_one():
    rng = np.random.default_rng(0)
    logits = rng.standard_normal((100, 17)) * 5
    mask = rng.random((100, 17)) < 0.4
    mask[:, 3] = True
    probs = softmax(logits, mask).value
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    assert (probs[~mask] == 0.0).all()
    assert (probs >= 0).all()


def test_dense_zero_weights_zero_output():
    store = ParamStore()
    rng = np.random.default_rng(0)
    init_net(NetSpec((("dense", 4, "tanh"),)), store, "net", 3, rng)
    store["net.0.w"].value[...] = 0.0
    out, _ = net_forward(NetSpec((("dense", 4, "tanh"),)), store, "net",
                         np.ones((2, 3)))
    assert not out.value.any()


def test_residual_zero_inner_is_identity():
    store = ParamStore()
    rng = np.random.default_rng(0)
    spec = NetSpec((("residual",),))
    init_net(spec, store, "net", 4, rng)
    store["net.0.fc2.w"].value[...] = 0.0
    store["net.0.fc2.b"].value[...] = 0.0
    x = np.random.default_rng(1).standard_normal((3, 4))
    out, _ = net_forward(spec, store, "net", x)
    assert np.array_equal(out.value, x)


def test_gru_saturated_update_gate_returns_candidate():
    store = ParamStore()
    rng = np.random.default_rng(0)
    spec = NetSpec((("gru", 5),))
    init_net(spec, store, "net", 4, rng)
    store["net.0.bz"].value[...] = 60.0  # update gate ~ 1
    x = rng.standard_normal((2, 4))
    h = rng.standard_normal((2, 5))
    out, new_state = net_forward(spec, store, "net", x, recurrent_state=h)
    # Candidate recomputed independently from the parameters.
    sig = lambda v: 1.0 / (1.0 + np.exp(-v))
    r = sig(x @ store["net.0.wr"].value + h @ store["net.0.ur"].value
            + store["net.0.br"].value)
    cand = np.tanh(x @ store["net.0.wh"].value
                   + (r * h) @ store["net.0.uh"].value
                   + store["net.0.bh"].value)
    assert np.allclose(out.value, cand, atol=1e-12)
    assert new_state is out


def test_net_forward_guards_nonfinite():
    store = ParamStore()
    spec = NetSpec((("dense", 2, "linear"),))
    init_net(spec, store, "net", 2, np.random.default_rng(0))
    store["net.0.w"].value[...] = np.inf
    with pytest.raises(FloatingPointError):
        net_forward(spec, store, "net", np.ones((1, 2)))


def test_matmul_backward_analytic():
    rng = np.random.default_rng(3)
    store = ParamStore()
    w = store.add("w", rng.standard_normal((4, 3)))
    x = rng.standard_normal((5, 4))
    g = rng.standard_normal((5, 3))
    out = ad.matmul(ad.as_var(x), store.leaf("w"))
    ad.backward(out, g)
    assert np.allclose(w.grad, x.T @ g, atol=1e-14)


def test_softmax_cross_entropy_gradient_identity():
    rng = np.random.default_rng(4)
    store = ParamStore()
    logits = store.add("logits", rng.standard_normal((6, 9)))
    picked = rng.integers(0, 9, size=6)
    probs = ad.masked_softmax(store.leaf("logits"),
                              np.ones((6, 9), dtype=bool))
    loss = ad.scale(ad.sum_all(ad.log_clip(ad.gather_cols(probs, picked))),
                    -1.0)
    ad.backward(loss)
    onehot = np.zeros((6, 9))
    onehot[np.arange(6), picked] = 1.0
    assert np.allclose(logits.grad, probs.value - onehot, atol=1e-12)


def test_attention_weights_are_convex_combinations():
    rng = np.random.default_rng(5)
    b, i = 8, 4
    for _ in range(100):
        q = ad.as_var(rng.standard_normal((b, i)))
        k = ad.as_var(rng.standard_normal((b * i, i)))
        # Values set to basis vectors: outputs are the attention weights.
        v = ad.as_var(np.tile(np.eye(i), (b, 1)))
        valid = rng.random((b, i)) < 0.7
        valid[:, 0] = True
        weights = ad.attention_combine(q, k, v, valid).value
        assert np.allclose(weights.sum(axis=1), 1.0, atol=1e-12)
        assert (weights >= 0).all()
        assert (weights[~valid] == 0.0).all()


def test_attention_single_key_returns_value_row():
    rng = np.random.default_rng(6)
    state_dim, a_count, d_att = 5, 7, 6
    store = ParamStore()
    init_cross_attention(store, "att", state_dim, a_count, d_att, rng)
    state = rng.standard_normal((1, state_dim))
    hist_states = rng.standard_normal((1, 1, state_dim))
    hist_actions = np.array([[3]])
    out = cross_attention(store, "att", state, hist_states, hist_actions,
                          np.array([[True]]))
    v_row = (hist_states[0] @ store["att.vs"].value
             + store["att.va"].value[3])
    assert np.allclose(out.value, v_row, atol=1e-12)


def test_attention_permutation_invariant_for_identical_rows():
    rng = np.random.default_rng(7)
    state_dim, a_count, d_att = 4, 5, 6
    store = ParamStore()
    init_cross_attention(store, "att", state_dim, a_count, d_att, rng)
    state = rng.standard_normal((1, state_dim))
    row = rng.standard_normal(state_dim)
    hist = np.stack([[row, row, row]])
    acts = np.array([[2, 2, 2]])
    valid = np.ones((1, 3), dtype=bool)
    a = cross_attention(store, "att", state, hist, acts, valid).value
    b = cross_attention(store, "att", state, hist[:, ::-1], acts, valid).value
    assert np.allclose(a, b, atol=1e-12)


def test_attention_empty_history_is_zero():
    rng = np.random.default_rng(8)
    store = ParamStore()
    init_cross_attention(store, "att", 4, 5, 6, rng)
    out = cross_attention(store, "att", rng.standard_normal((2, 4)),
                          np.zeros((2, 3, 4)),
                          np.zeros((2, 3), dtype=np.intp),
                          np.zeros((2, 3), dtype=bool))
    assert not out.value.any()


def test_adam_zero_gradients_fresh_moments_noop():
    store = ParamStore()
    p = store.add("w", np.ones((3, 3)))
    before = p.value.copy()
    adam_step(store, 1e-2)
    assert np.array_equal(p.value, before)


def test_adam_first_step_opposes_gradient_sign():
    store = ParamStore()
    p = store.add("w", np.zeros(4))
    p.grad[...] = np.array([1.0, -2.0, 3.0, -4.0])
    adam_step(store, 1e-2)
    assert (np.sign(p.value) == -np.sign(p.grad)).all()


def test_adam_deterministic():
    def run():
        store = ParamStore()
        p = store.add("w", np.linspace(-1, 1, 6))
        for i in range(25):
            p.grad[...] = np.sin(p.value + i)
            adam_step(store, 3e-3)
            zero_grads(store)
        return p.value.copy()

    assert np.array_equal(run(), run())


def test_sgd_step():
    store = ParamStore()
    p = store.add("w", np.ones(3))
    p.grad[...] = 2.0
    sgd_step(store, 0.1)
    assert np.allclose(p.value, 0.8)


def test_stale_tape_rejected_after_update():
    store = ParamStore()
    store.add("w", np.ones((2, 2)))
    out = ad.matmul(ad.as_var(np.ones((1, 2))), store.leaf("w"))
    loss = ad.sum_all(out)
    store["w"].grad[...] = 1.0
    adam_step(store, 1e-2)
    with pytest.raises(RuntimeError):
        ad.backward(loss)


def test_gradient_accumulates_across_shared_leaf():
    store = ParamStore()
    w = store.add("w", np.array([[2.0]]))
    leaf = store.leaf("w")
    out = ad.mul(leaf, leaf)  # w^2: gradient 2w
    ad.backward(ad.sum_all(out))
    assert w.grad[0, 0] == 4.0


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    arrays = {"a.w": rng.standard_normal((3, 4)),
              "b.bias": rng.standard_normal(7),
              "scalarish": rng.standard_normal(1)}
    path = tmp_path / "ck.bin"
    save_arrays(arrays, str(path))
    loaded = load_arrays(str(path))
    assert set(loaded) == set(arrays)
    for k in arrays:
        assert np.array_equal(loaded[k], arrays[k])
    # Byte-determinism.
    path2 = tmp_path / "ck2.bin"
    save_arrays(arrays, str(path2))
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_rejects_foreign_files(tmp_path):
    path = tmp_path / "bogus.bin"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(ValueError):
        load_arrays(str(path))


def test_store_load_arrays_validates_shapes():
    store = ParamStore()
    store.add("w", np.zeros((2, 2)))
    with pytest.raises(KeyError):
        store.load_arrays({})
    with pytest.raises(ValueError):
        store.load_arrays({"w": np.zeros((3, 3))})
