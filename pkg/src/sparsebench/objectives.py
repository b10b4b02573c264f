"""Loss functions and their gradients, independent of any optimizer.

Two loss families over a linear score s_i = b0 + <w, x_i>:

* logistic: mean cross-entropy, (1/M) sum_i [-y_i log h_i - (1-y_i) log(1-h_i)]
  with h_i = sigmoid(s_i);
* hinge: plain sum over samples of max(0, 1 - t_i s_i) with t_i = 2 y_i - 1.

The L1 penalty lambda * sum_j |w_j| never touches the intercept. The two
families keep their native normalizations (mean vs sum), so lambda values
are not comparable across families.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

__all__ = [
    "ObjectiveKind",
    "ObjectiveSpec",
    "WeightVector",
    "sigmoid_prob",
    "logistic_cost",
    "logistic_gradient",
    "hinge_cost",
    "hinge_gradient_smoothed",
    "huber_hinge_cost",
    "soft_threshold",
    "decision_scores",
]

# Probabilities are clamped to this interval inside logs so the cost stays
# finite for arbitrarily large scores.
PROB_CLAMP = 1e-12


class ObjectiveKind(enum.Enum):
    LOGISTIC_PLAIN = "logistic_plain"
    LOGISTIC_L1 = "logistic_l1"
    HINGE_PLAIN = "hinge_plain"
    HINGE_L1 = "hinge_l1"

    @property
    def is_logistic(self) -> bool:
        return self in (ObjectiveKind.LOGISTIC_PLAIN, ObjectiveKind.LOGISTIC_L1)

    @property
    def penalized(self) -> bool:
        return self in (ObjectiveKind.LOGISTIC_L1, ObjectiveKind.HINGE_L1)


@dataclass(frozen=True)
class ObjectiveSpec:
    """Loss family plus penalty weight. lam == 0 iff the kind is plain."""

    kind: ObjectiveKind
    lam: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.kind.penalized and self.lam == 0:
            raise ValueError(f"{self.kind.value} requires lambda > 0")
        if not self.kind.penalized and self.lam != 0:
            raise ValueError(f"{self.kind.value} requires lambda == 0")


@dataclass(frozen=True)
class WeightVector:
    """Intercept plus one weight per feature column."""

    intercept: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError(f"weights must be 1-D, got shape {w.shape}")
        if not (np.isfinite(self.intercept) and np.all(np.isfinite(w))):
            raise ValueError("weights must be finite")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))

    @classmethod
    def zeros(cls, n: int) -> "WeightVector":
        return cls(0.0, np.zeros(n))

    def l1_norm(self) -> float:
        # penalty term only: the intercept is excluded by definition
        return float(np.abs(self.weights).sum())


def decision_scores(w: WeightVector, features: np.ndarray) -> np.ndarray:
    return w.intercept + features @ w.weights


def _sigmoid(scores: np.ndarray) -> np.ndarray:
    # piecewise form avoids overflow in exp for large |score|
    out = np.empty_like(scores, dtype=np.float64)
    pos = scores >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-scores[pos]))
    es = np.exp(scores[~pos])
    out[~pos] = es / (1.0 + es)
    return out


def sigmoid_prob(w: WeightVector, x: np.ndarray) -> np.ndarray | float:
    """P(label = 1 | x) under the logistic model; x is one row or a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return float(_sigmoid(np.array([w.intercept + x @ w.weights]))[0])
    return _sigmoid(decision_scores(w, x))


def _check_pair(w: WeightVector, d: Dataset) -> None:
    if w.weights.shape[0] != d.n_features:
        raise ValueError(f"weight length {w.weights.shape[0]} != feature count {d.n_features}")


def logistic_cost(w: WeightVector, d: Dataset, lam: float = 0.0) -> float:
    """Mean cross-entropy plus lam * |w|_1 (intercept unpenalized)."""
    _check_pair(w, d)
    h = _sigmoid(decision_scores(w, d.features))
    h = np.clip(h, PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = d.labels
    loss = float(np.mean(-y * np.log(h) - (1 - y) * np.log(1.0 - h)))
    return loss + lam * w.l1_norm()


def logistic_gradient(w: WeightVector, d: Dataset) -> WeightVector:
    """Gradient of the smooth part of logistic_cost (the penalty excluded)."""
    _check_pair(w, d)
    h = _sigmoid(decision_scores(w, d.features))
    r = h - d.labels
    m = d.n_samples
    return WeightVector(float(r.sum() / m), d.features.T @ r / m)


def hinge_cost(w: WeightVector, d: Dataset, lam: float = 0.0) -> float:
    """Sum of hinge losses plus lam * |w|_1.

    Plain sum over samples (no 1/M), so values and useful lambdas scale
    with the sample count.
    """
    _check_pair(w, d)
    t = 2.0 * d.labels - 1.0
    margins = t * decision_scores(w, d.features)
    loss = float(np.maximum(0.0, 1.0 - margins).sum())
    return loss + lam * w.l1_norm()


def huber_hinge_cost(w: WeightVector, d: Dataset, lam: float = 0.0, delta: float = 1e-3) -> float:
    """Smoothed hinge sum: quadratic on margins in [1-delta, 1+delta].

    Upper bounds hinge_cost and decreases to it pointwise as delta -> 0.
    """
    _check_pair(w, d)
    t = 2.0 * d.labels - 1.0
    margins = t * decision_scores(w, d.features)
    loss = _huber_loss_from_margins(margins, delta)
    return loss + lam * w.l1_norm()


def _huber_loss_from_margins(margins: np.ndarray, delta: float) -> float:
    vals = np.zeros_like(margins)
    lin = margins <= 1.0 - delta
    quad = ~lin & (margins < 1.0 + delta)
    vals[lin] = 1.0 - margins[lin]
    vals[quad] = (1.0 + delta - margins[quad]) ** 2 / (4.0 * delta)
    return float(vals.sum())


def hinge_gradient_smoothed(w: WeightVector, d: Dataset, delta: float = 1e-3) -> WeightVector:
    """Gradient of the smoothed hinge sum (the penalty excluded)."""
    _check_pair(w, d)
    t = 2.0 * d.labels - 1.0
    margins = t * decision_scores(w, d.features)
    dloss = np.zeros_like(margins)  # d loss / d margin
    lin = margins <= 1.0 - delta
    quad = ~lin & (margins < 1.0 + delta)
    dloss[lin] = -1.0
    dloss[quad] = -(1.0 + delta - margins[quad]) / (2.0 * delta)
    coeff = dloss * t
    return WeightVector(float(coeff.sum()), d.features.T @ coeff)


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0), elementwise; exact zeros inside [-t, t]."""
    z = np.asarray(z, dtype=np.float64)
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return float(out) if out.ndim == 0 else out
