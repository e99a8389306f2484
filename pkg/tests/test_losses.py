import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from foiwatch.errors import DimensionMismatchError, EmptyInputError, NonFiniteError
from foiwatch.losses import (bce_batch_gradient, bce_logit_gradient, bce_logit_loss, bce_multilabel, dice_loss,
                             finite_difference_gradient, sigmoid, total_loss, triplet_loss)
from foiwatch.models.loss import CompositeWeights, LogitModel, LossTerms, TripletConfig
from foiwatch.vectorspace import squared_l2_distance

coords = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)


def test_triplet_examples():
    cfg = TripletConfig(margin=0.2)
    assert triplet_loss([0, 0], [0, 0], [2, 0], cfg) == 0.0
    assert triplet_loss([0, 0], [1, 0], [1, 0], cfg) == pytest.approx(0.2)
    assert triplet_loss([0], [1], [0], cfg) == pytest.approx(1.2)
    with pytest.raises(DimensionMismatchError):
        triplet_loss([0, 0], [1], [0, 0], cfg)


def test_triplet_margin_must_be_positive():
    with pytest.raises(ValueError):
        TripletConfig(margin=0)


@settings(max_examples=10_000)
@given(arrays(np.float64, 4, elements=coords), arrays(np.float64, 4, elements=coords),
       arrays(np.float64, 4, elements=coords), st.floats(min_value=1e-3, max_value=2))
def test_triplet_zero_exactly_when_margin_satisfied(a, p, n, margin):
    loss = triplet_loss(a, p, n, TripletConfig(margin=margin))
    satisfied = squared_l2_distance(a, p) + margin <= squared_l2_distance(a, n)
    assert (loss == 0.0) == satisfied
    assert loss >= 0.0


@given(arrays(np.float64, 5, elements=coords), arrays(np.float64, 5, elements=coords),
       arrays(np.float64, 5, elements=coords), st.permutations(range(5)))
def test_triplet_invariant_under_joint_permutation(a, p, n, perm):
    perm = list(perm)
    assert triplet_loss(a[perm], p[perm], n[perm]) == pytest.approx(triplet_loss(a, p, n), abs=1e-9)


def test_bce_examples():
    assert bce_multilabel([0.5], [1]) == pytest.approx(0.6931472, abs=1e-6)
    assert bce_multilabel([1 - 1e-9], [1]) == pytest.approx(0.0, abs=1e-6)
    assert bce_multilabel([0.5, 0.5], [1, 0]) == pytest.approx(0.6931472, abs=1e-6)


def test_bce_is_bounded_when_saturated():
    assert math.isfinite(bce_multilabel([0.0, 1.0], [1, 0]))


def test_bce_rejects_bad_input():
    with pytest.raises(EmptyInputError):
        bce_multilabel([], [])
    with pytest.raises(DimensionMismatchError):
        bce_multilabel([0.5], [1, 0])


@given(st.lists(st.sampled_from([0.0, 1.0]), min_size=1, max_size=8))
def test_bce_minimised_at_labels(labels):
    assert bce_multilabel(labels, labels) < 1e-10


def test_logit_gradient_examples():
    grad = bce_logit_gradient(LogitModel(w=[0.0], bias=0.0), [1.0], 1)
    assert grad.w == pytest.approx([-0.5])
    assert grad.bias == pytest.approx(-0.5)
    grad = bce_logit_gradient(LogitModel(w=[0.0], bias=0.0), [2.0], 0)
    assert grad.w == pytest.approx([1.0])
    assert grad.bias == pytest.approx(0.5)


def test_logit_gradient_zero_at_stationary_point():
    model = LogitModel(w=[0.0, 0.0], bias=0.0)
    grad = bce_logit_gradient(model, [1.0, -2.0], sigmoid(0.0))
    assert np.all(grad.flat() == 0.0)


def test_logit_gradient_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        bce_logit_gradient(LogitModel(w=[0.0, 1.0]), [1.0], 1)
    with pytest.raises(NonFiniteError):
        bce_logit_gradient(LogitModel(w=[0.0]), [float('inf')], 1)


def _loss_of_params(x, y):
    def f(params):
        return bce_logit_loss(LogitModel(w=params[:-1], bias=params[-1]), x, y)
    return f


def test_logit_gradient_matches_finite_differences(rng):
    for _ in range(1000):
        dim = int(rng.integers(1, 6))
        w = rng.uniform(-1, 1, dim)
        bias = float(rng.uniform(-1, 1))
        x = rng.uniform(-1, 1, dim)
        y = float(rng.integers(0, 2))
        analytic = bce_logit_gradient(LogitModel(w=w, bias=bias), x, y).flat()
        numeric = finite_difference_gradient(_loss_of_params(x, y), np.append(w, bias), step=1e-5)
        assert np.allclose(analytic, numeric, rtol=1e-5, atol=1e-8)


def test_batch_gradient_is_mean_of_samples():
    model = LogitModel(w=[0.3, -0.2], bias=0.1)
    xs = [[1.0, 2.0], [-1.0, 0.5]]
    ys = [1, 0]
    batch = bce_batch_gradient(model, xs, ys)
    singles = [bce_logit_gradient(model, x, y).flat() for x, y in zip(xs, ys)]
    assert batch.flat() == pytest.approx(np.mean(singles, axis=0))
    with pytest.raises(EmptyInputError):
        bce_batch_gradient(model, [], [])


def test_dice_examples():
    assert dice_loss([1, 0, 1], [1, 0, 1]) == pytest.approx(0.0, abs=1e-6)
    assert dice_loss([1, 1, 0, 0], [0, 0, 1, 1]) == pytest.approx(1.0, abs=1e-6)
    assert dice_loss([1, 1, 0, 0], [1, 0, 0, 0]) == pytest.approx(1 - 2 / 3, abs=1e-5)
    with pytest.raises(DimensionMismatchError):
        dice_loss([1, 0], [1])


@given(st.lists(st.sampled_from([0.0, 1.0]), min_size=1, max_size=16).flatmap(
    lambda a: st.tuples(st.just(a), st.lists(st.sampled_from([0.0, 1.0]), min_size=len(a), max_size=len(a)))))
def test_dice_symmetric_for_binary_masks(masks):
    pred, gt = masks
    assert dice_loss(pred, gt) == pytest.approx(dice_loss(gt, pred))
    assert 0.0 <= dice_loss(pred, gt) <= 1.0


def test_total_loss_examples():
    assert total_loss(LossTerms(class_loss=0, box_loss=0, seg_bce=0, seg_dice=0)) == 0
    assert total_loss(LossTerms(class_loss=1, box_loss=1, seg_bce=1, seg_dice=1),
                      CompositeWeights(alpha=1, beta=1)) == 4
    assert total_loss(LossTerms(class_loss=0.1, box_loss=0.2, seg_bce=0.3, seg_dice=0.4),
                      CompositeWeights(alpha=2, beta=0.5)) == pytest.approx(1.1)
    with pytest.raises(NonFiniteError):
        total_loss(LossTerms(class_loss=float('nan'), box_loss=0, seg_bce=0, seg_dice=0))


def test_composite_gradient_is_weighted_sum_of_term_gradients(rng):
    """Each term depends on shared parameters; d(total) = d(class) + d(box) + a d(bce) + b d(dice)"""
    weights = CompositeWeights(alpha=1.7, beta=0.4)
    x = rng.uniform(-1, 1, 3)
    target = np.array([1.0, 0.0, 1.0])

    def terms(params):
        model = LogitModel(w=params[:-1], bias=params[-1])
        probs = [sigmoid(float(np.dot(params[:-1], x)) * k + params[-1]) for k in (1.0, -0.5, 2.0)]
        return LossTerms(
            class_loss=bce_logit_loss(model, x, 1.0),
            box_loss=float(np.sum((params - 0.25) ** 2)),
            seg_bce=bce_multilabel(probs, target),
            seg_dice=dice_loss(probs, target),
        )

    def component(name):
        return lambda params: getattr(terms(params), name)

    for _ in range(50):
        at = rng.uniform(-1, 1, 4)
        total = finite_difference_gradient(lambda params: total_loss(terms(params), weights), at)
        parts = {name: finite_difference_gradient(component(name), at)
                 for name in ('class_loss', 'box_loss', 'seg_bce', 'seg_dice')}
        combined = (parts['class_loss'] + parts['box_loss']
                    + weights.alpha * parts['seg_bce'] + weights.beta * parts['seg_dice'])
        assert np.allclose(total, combined, rtol=1e-5, atol=1e-8)


def test_finite_difference_examples():
    assert finite_difference_gradient(lambda v: float(v[0] ** 2), [2.0]) == pytest.approx([4.0], abs=1e-5)
    assert np.all(finite_difference_gradient(lambda v: 3.0, [1.0, 2.0]) == 0.0)
    assert finite_difference_gradient(lambda v: float(np.sum(v)), [0.5, -1.0, 7.0]) == pytest.approx([1, 1, 1])


def test_finite_difference_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        finite_difference_gradient(lambda v: float('inf'), [1.0])
    with pytest.raises(ValueError):
        finite_difference_gradient(lambda v: 0.0, [1.0], step=0)
