import numpy as np
import pytest

from splitjam.slmodel import split_at
from splitjam.splitnn import (BITS_PER_ELEMENT, DenseLayer, DenseSegment,
                              apply_updates, backward_chain, compute_loss,
                              forward_chain, loss_grad, make_chain,
                              monolithic_oracle, spec_from_chain,
                              split_layers)


def _identity_segment(dim):
    return DenseSegment([DenseLayer(weight=np.eye(dim),
                                    bias=np.zeros(dim),
                                    activation="linear")])


def test_forward_identity_segments():
    rng = np.random.default_rng(0)
    batch = rng.standard_normal((5, 3))
    segments = [_identity_segment(3) for _ in range(4)]
    outs, _ = forward_chain(segments, batch)
    assert np.array_equal(outs[-1], batch)


def test_single_segment_equals_monolithic_bitwise():
    layers = make_chain([4, 6, 5, 2], seed=3)
    rng = np.random.default_rng(1)
    batch = rng.standard_normal((7, 4))
    labels = rng.standard_normal((7, 2))
    outs, cache = forward_chain([DenseSegment(layers)], batch)
    loss = compute_loss(outs[-1], labels)
    grads, _ = backward_chain([DenseSegment(layers)], cache,
                              loss_grad(outs[-1], labels))
    ref_loss, ref_grads = monolithic_oracle(layers, batch, labels)
    assert loss == ref_loss
    for (dw, db), (rw, rb) in zip(grads[0], ref_grads):
        assert np.array_equal(dw, rw)
        assert np.array_equal(db, rb)


def test_loss_examples():
    rng = np.random.default_rng(2)
    z = rng.standard_normal((6, 3))
    assert compute_loss(z, z) == 0.0
    c = 0.37
    assert compute_loss(z + c, z) == pytest.approx(c * c, rel=1e-12)


def test_loss_matches_straight_line_recomputation():
    rng = np.random.default_rng(3)
    z = rng.standard_normal((8, 4))
    y = rng.standard_normal((8, 4))
    manual = sum((z[i, j] - y[i, j]) ** 2
                 for i in range(8) for j in range(4)) / 32
    assert compute_loss(z, y) == pytest.approx(manual, rel=1e-14)


def test_backward_zero_gradient():
    layers = make_chain([3, 4, 2], seed=0)
    batch = np.random.default_rng(0).standard_normal((4, 3))
    outs, cache = forward_chain([DenseSegment(layers)], batch)
    grads, boundary = backward_chain([DenseSegment(layers)], cache,
                                     np.zeros_like(outs[-1]))
    for dw, db in grads[0]:
        assert not dw.any()
        assert not db.any()
    assert not boundary[0].any()


def test_backward_requires_cache():
    layers = make_chain([3, 4, 2], seed=0)
    with pytest.raises(ValueError):
        backward_chain([DenseSegment(layers)], None, np.zeros((4, 2)))


def test_split_invisibility_sample():
    rng = np.random.default_rng(4)
    for case in range(20):
        dims = [int(rng.integers(2, 7)) for _ in range(int(rng.integers(4, 8)))]
        layers = make_chain(dims, seed=case)
        n_layers = len(layers)
        cuts = sorted(rng.choice(np.arange(1, n_layers),
                                 size=int(rng.integers(1, n_layers)),
                                 replace=False).tolist())
        segments = split_layers(layers, cuts)
        batch = rng.standard_normal((5, dims[0]))
        labels = rng.standard_normal((5, dims[-1]))
        outs, cache = forward_chain(segments, batch)
        loss = compute_loss(outs[-1], labels)
        grads, _ = backward_chain(segments, cache,
                                  loss_grad(outs[-1], labels))
        ref_loss, ref_grads = monolithic_oracle(layers, batch, labels)
        assert loss == pytest.approx(ref_loss, rel=1e-12)
        flat = [g for seg in grads for g in seg]
        for (dw, db), (rw, rb) in zip(flat, ref_grads):
            assert np.allclose(dw, rw, rtol=1e-10, atol=1e-14)
            assert np.allclose(db, rb, rtol=1e-10, atol=1e-14)


def test_cut_position_never_changes_loss():
    layers = make_chain([3, 5, 5, 5, 2], seed=9)
    rng = np.random.default_rng(9)
    batch = rng.standard_normal((6, 3))
    labels = rng.standard_normal((6, 2))
    losses = []
    for cuts in ([1], [2], [3], [1, 3], [1, 2, 3]):
        outs, _ = forward_chain(split_layers(layers, cuts), batch)
        losses.append(compute_loss(outs[-1], labels))
    assert all(l == losses[0] for l in losses)


def test_gradients_match_finite_differences():
    layers = make_chain([3, 4, 2], seed=11)
    rng = np.random.default_rng(11)
    batch = rng.standard_normal((5, 3))
    labels = rng.standard_normal((5, 2))
    segments = split_layers(layers, [1])
    outs, cache = forward_chain(segments, batch)
    grads, _ = backward_chain(segments, cache, loss_grad(outs[-1], labels))
    step = 1e-6
    for _ in range(10):
        li = int(rng.integers(len(layers)))
        layer = layers[li]
        idx = int(rng.integers(layer.weight.size))
        original = layer.weight.flat[idx]
        layer.weight.flat[idx] = original + step
        up = compute_loss(forward_chain(segments, batch)[0][-1], labels)
        layer.weight.flat[idx] = original - step
        down = compute_loss(forward_chain(segments, batch)[0][-1], labels)
        layer.weight.flat[idx] = original
        fd = (up - down) / (2 * step)
        seg_idx = 0 if li < 1 else 1
        inner = li if li < 1 else li - 1
        an = grads[seg_idx][inner][0].flat[idx]
        assert abs(fd - an) <= 1e-4 * max(abs(fd), abs(an), 1e-6)


def test_apply_updates_zero_lr_is_identity():
    layers = make_chain([3, 4, 2], seed=5)
    segments = split_layers(layers, [1])
    before = [l.weight.copy() for l in layers]
    rng = np.random.default_rng(5)
    batch = rng.standard_normal((4, 3))
    labels = rng.standard_normal((4, 2))
    outs, cache = forward_chain(segments, batch)
    grads, _ = backward_chain(segments, cache, loss_grad(outs[-1], labels))
    apply_updates(segments, grads, 0.0)
    assert all(np.array_equal(b, l.weight) for b, l in zip(before, layers))


def test_single_step_descends():
    layers = make_chain([3, 4, 2], seed=6)
    segments = split_layers(layers, [1])
    rng = np.random.default_rng(6)
    batch = rng.standard_normal((8, 3))
    labels = rng.standard_normal((8, 2))
    outs, cache = forward_chain(segments, batch)
    loss0 = compute_loss(outs[-1], labels)
    grads, _ = backward_chain(segments, cache, loss_grad(outs[-1], labels))
    apply_updates(segments, grads, 1e-2)
    loss1 = compute_loss(forward_chain(segments, batch)[0][-1], labels)
    assert loss1 < loss0


def test_training_smoke_reduces_loss_100x():
    rng = np.random.default_rng(7)
    layers = make_chain([4, 16, 16, 2], seed=7)
    segments = split_layers(layers, [1, 2])
    w_true = rng.standard_normal((2, 4))
    batch = rng.standard_normal((64, 4))
    labels = batch @ w_true.T
    outs, cache = forward_chain(segments, batch)
    loss0 = compute_loss(outs[-1], labels)
    for _ in range(200):
        outs, cache = forward_chain(segments, batch)
        grads, _ = backward_chain(segments, cache,
                                  loss_grad(outs[-1], labels))
        apply_updates(segments, grads, 0.1)
    loss_final = compute_loss(forward_chain(segments, batch)[0][-1], labels)
    assert loss_final <= loss0 / 100.0


def test_gradient_norms_finite_across_seeds():
    rng = np.random.default_rng(8)
    for seed in range(100):
        layers = make_chain([3, 5, 2], seed=seed)
        batch = rng.standard_normal((4, 3))
        labels = rng.standard_normal((4, 2))
        _, grads = monolithic_oracle(layers, batch, labels)
        for dw, db in grads:
            assert np.isfinite(dw).all() and np.isfinite(db).all()


def test_shape_mismatch_raises():
    layers = make_chain([3, 4, 2], seed=0)
    with pytest.raises(ValueError):
        forward_chain([DenseSegment(layers)],
                      np.zeros((4, 5)))


def test_message_shapes_tie_to_split_plan():
    layers = make_chain([4, 6, 5, 3, 2], seed=1)
    spec = spec_from_chain(layers, input_dim=4)
    plan = split_at(spec, [1, 3])
    segments = split_layers(layers, [1, 3])
    batch = np.random.default_rng(2).standard_normal((3, 4))
    outs, cache = forward_chain(segments, batch)
    # Forward messages match declared boundary bit sizes.
    for seg, z in zip(plan.segments, outs):
        assert z.shape[1] * BITS_PER_ELEMENT == seg.out_bits
    # Backward messages match the gradient boundary sizes.
    _, boundary = backward_chain(segments, cache,
                                 loss_grad(outs[-1],
                                           np.zeros_like(outs[-1])))
    for seg, g in zip(plan.segments, boundary):
        assert g.shape[1] * BITS_PER_ELEMENT == seg.grad_in_bits
