import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from splitjam.errors import NonMonotoneCuts
from splitjam.slmodel import (make_model, segment_from_range, split_at,
                              validate_plan)


def test_uniform_model_sums():
    model = make_model(8, "uniform", seed=0)
    assert model.total_dim_bits == 8e6
    assert all(l.param_bits == 1e6 for l in model.layers)


def test_make_model_deterministic():
    assert make_model(8, "pyramid", seed=5) == make_model(8, "pyramid", seed=5)


def test_pyramid_activations_strictly_decreasing():
    model = make_model(8, "pyramid", seed=1)
    acts = [l.boundary_activation_bits for l in model.layers]
    assert all(a > b for a, b in zip(acts, acts[1:]))


def test_make_model_rejects_bad_args():
    with pytest.raises(ValueError):
        make_model(0)
    with pytest.raises(ValueError):
        make_model(4, "bogus")


def test_split_equal_layers():
    model = make_model(8, "uniform", seed=0)
    plan = split_at(model, [2, 4, 6])
    assert plan.segment_count == 4
    assert all(seg.param_bits == 2e6 for seg in plan.segments)
    assert validate_plan(plan, model)


def test_split_identity_partition():
    model = make_model(5, "uniform", seed=0)
    plan = split_at(model, [])
    assert plan.segment_count == 1
    assert plan.segments[0].param_bits == model.total_dim_bits
    assert plan.segments[0].grad_in_bits == model.input_bits


def test_split_rejects_bad_cuts():
    model = make_model(8, "uniform", seed=0)
    for cuts in ([4, 2], [2, 2], [0, 3], [3, 8]):
        with pytest.raises(NonMonotoneCuts):
            split_at(model, cuts)


def test_grad_in_bits_follow_boundaries():
    model = make_model(8, "pyramid", seed=2)
    plan = split_at(model, [3, 5])
    assert plan.segments[0].grad_in_bits == model.input_bits
    assert (plan.segments[1].grad_in_bits
            == model.layers[2].boundary_activation_bits)
    assert (plan.segments[1].grad_in_bits == plan.segments[0].out_bits)


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_partition_conservation(data):
    n_layers = data.draw(st.integers(2, 12))
    model = make_model(n_layers, "pyramid", seed=data.draw(st.integers(0, 99)))
    n_cuts = data.draw(st.integers(0, n_layers - 1))
    cuts = sorted(data.draw(st.sets(st.integers(1, n_layers - 1),
                                    min_size=n_cuts, max_size=n_cuts)))
    plan = split_at(model, cuts)
    assert sum(seg.param_bits for seg in plan.segments) == pytest.approx(
        model.total_dim_bits, rel=1e-12)
    # Concatenating segment ranges reproduces the layer list exactly.
    ranges = [(seg.start, seg.end) for seg in plan.segments]
    flat = [i for lo, hi in ranges for i in range(lo, hi)]
    assert flat == list(range(n_layers))
    assert validate_plan(plan, model)


def test_validate_plan_detects_gaps_and_overlap():
    model = make_model(8, "uniform", seed=0)
    plan = split_at(model, [2, 4])
    # Dropped-layer plan: skip layers [2, 4).
    broken = type(plan)(cuts=(2, 4),
                        segments=(plan.segments[0], plan.segments[2]))
    assert not validate_plan(broken, model)
    # Duplicated segment overlaps.
    dup = type(plan)(cuts=(2, 4),
                     segments=(plan.segments[0], plan.segments[0],
                               plan.segments[1], plan.segments[2]))
    assert not validate_plan(dup, model)
    assert not validate_plan(type(plan)(cuts=(), segments=()), model)


def test_validate_plan_detects_tampered_sizes():
    model = make_model(6, "uniform", seed=0)
    plan = split_at(model, [3])
    seg = plan.segments[0]
    forged = type(seg)(start=seg.start, end=seg.end,
                       param_bits=seg.param_bits + 1.0,
                       out_bits=seg.out_bits, grad_in_bits=seg.grad_in_bits,
                       fwd_flop_coeff=seg.fwd_flop_coeff,
                       bwd_flop_coeff=seg.bwd_flop_coeff,
                       sensitivity_weight=seg.sensitivity_weight)
    assert not validate_plan(type(plan)(cuts=plan.cuts,
                                        segments=(forged, plan.segments[1])),
                             model)


def test_segment_from_range_matches_split():
    model = make_model(7, "pyramid", seed=3)
    plan = split_at(model, [2, 5])
    assert segment_from_range(model, 2, 5) == plan.segments[1]
