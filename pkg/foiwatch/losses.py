"""
Loss mathematics for the segmentation and embedding stages: triplet loss, multi-label BCE
with its analytic logit gradient, smooth dice, the weighted composite and a central
finite-difference oracle.

Only the math lives here; there is no optimizer or training loop.
"""
import math
from typing import Callable, NamedTuple, Sequence

import numpy as np

from foiwatch.errors import DimensionMismatchError, EmptyInputError, NonFiniteError
from foiwatch.models.loss import CompositeWeights, LogitModel, LossTerms, TripletConfig
from foiwatch.utils import settings
from foiwatch.vectorspace import squared_l2_distance


class LogitGradient(NamedTuple):
    w: np.ndarray
    bias: float

    def flat(self) -> np.ndarray:
        """Gradient over the parameter vector [w..., bias]"""
        return np.append(self.w, self.bias)


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def triplet_loss(a, p, n, cfg: TripletConfig = TripletConfig()) -> float:
    """max(0, d2(a, p) - d2(a, n) + margin); exactly 0 once d2(a, p) + margin <= d2(a, n)"""
    positive = squared_l2_distance(a, p)
    negative = squared_l2_distance(a, n)
    # subtracting two distinct floats never yields 0, so the zero case is exact
    shifted = positive + cfg.margin
    if shifted <= negative:
        return 0.0
    return shifted - negative


def _clamp(probs: np.ndarray) -> np.ndarray:
    eps = settings.PROBABILITY_CLAMP
    return np.clip(probs, eps, 1.0 - eps)


def bce_multilabel(probs: Sequence[float], labels: Sequence[float]) -> float:
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.size == 0:
        raise EmptyInputError("bce needs at least one probability")
    if p.shape != y.shape:
        raise DimensionMismatchError(f"probs and labels differ in length: {p.shape} vs {y.shape}")
    p = _clamp(p)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def bce_logit_loss(model: LogitModel, x: Sequence[float], y: float) -> float:
    """Single-sample BCE of sigmoid(w.x + bias) against y"""
    xs = _check_input(model, x)
    p = sigmoid(float(np.dot(model.w, xs)) + model.bias)
    return bce_multilabel([p], [y])


def _check_input(model: LogitModel, x: Sequence[float]) -> np.ndarray:
    xs = np.asarray(x, dtype=np.float64)
    if xs.shape != model.w.shape:
        raise DimensionMismatchError(f"input dim {xs.shape} does not match weights {model.w.shape}")
    if not np.all(np.isfinite(xs)):
        raise NonFiniteError("input contains NaN or Inf")
    return xs


def bce_logit_gradient(model: LogitModel, x: Sequence[float], y: float) -> LogitGradient:
    """
    Analytic gradient of the single-sample BCE term through the sigmoid.

    Chain rule: dL/dp * dp/dz * dz/dw collapses to (p - y) * x, and (p - y) for the bias.
    """
    xs = _check_input(model, x)
    p = sigmoid(float(np.dot(model.w, xs)) + model.bias)
    residual = p - float(y)
    return LogitGradient(w=residual * xs, bias=residual)


def bce_batch_gradient(model: LogitModel, xs: Sequence[Sequence[float]], ys: Sequence[float]) -> LogitGradient:
    """Per-sample gradients averaged over the batch (the 1/N convention)"""
    if len(xs) == 0:
        raise EmptyInputError("batch gradient needs at least one sample")
    if len(xs) != len(ys):
        raise DimensionMismatchError(f"{len(xs)} inputs but {len(ys)} labels")
    grads = [bce_logit_gradient(model, x, y) for x, y in zip(xs, ys)]
    return LogitGradient(w=np.mean([g.w for g in grads], axis=0),
                         bias=float(np.mean([g.bias for g in grads])))


def dice_loss(pred: Sequence[float], gt: Sequence[float]) -> float:
    """Smooth dice complement 1 - (2|P.G| + eps) / (|P| + |G| + eps)"""
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    if p.size == 0:
        raise EmptyInputError("dice needs a non-empty mask")
    if p.shape != g.shape:
        raise DimensionMismatchError(f"mask shapes differ: {p.shape} vs {g.shape}")
    eps = settings.DICE_SMOOTHING
    score = (2.0 * float(np.dot(p, g)) + eps) / (float(p.sum()) + float(g.sum()) + eps)
    return min(1.0, max(0.0, 1.0 - score))


def total_loss(terms: LossTerms, weights: CompositeWeights = CompositeWeights()) -> float:
    values = (terms.class_loss, terms.box_loss, terms.seg_bce, terms.seg_dice)
    if not all(math.isfinite(v) for v in values):
        raise NonFiniteError(f"loss terms must be finite: {values}")
    return terms.class_loss + terms.box_loss + weights.alpha * terms.seg_bce + weights.beta * terms.seg_dice


def finite_difference_gradient(f: Callable[[np.ndarray], float], at: Sequence[float],
                               step: float = 1e-5) -> np.ndarray:
    """Central differences (f(at + h e_i) - f(at - h e_i)) / 2h for every coordinate"""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    point = np.atleast_1d(np.asarray(at, dtype=np.float64))
    grad = np.empty_like(point)
    for i in range(point.size):
        forward = point.copy()
        backward = point.copy()
        forward[i] += step
        backward[i] -= step
        f_plus = float(f(forward))
        f_minus = float(f(backward))
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise NonFiniteError(f"f is not finite near coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * step)
    return grad
