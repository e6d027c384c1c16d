"""From factor features to spam decisions.

A small full-batch logistic-regression classifier (spam = 1), feature
concatenation across two trained models, and the two decision policies a
binary F-measure needs: a probability threshold and a top-k cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTrainingError, DimensionError, SignedLfmError
from .factors import FactorModel
from .operators import OperatorKind, apply_operator


@dataclass
class LinearClassifier:
    weights: np.ndarray
    bias: float
    l2: float

    def predict(self, features: np.ndarray) -> float:
        """Spam probability for one feature vector."""
        x = np.asarray(features, dtype=np.float64)
        if x.shape != self.weights.shape:
            raise DimensionError(
                f"feature dim {x.shape} != weight dim {self.weights.shape}"
            )
        z = float(self.weights @ x) + self.bias
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)

    def predict_many(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.weights.shape[0]:
            raise DimensionError(
                f"feature matrix {x.shape} incompatible with weight dim "
                f"{self.weights.shape[0]}"
            )
        z = x @ self.weights + self.bias
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        e = np.exp(z[~pos])
        out[~pos] = e / (1.0 + e)
        return out


def classifier_loss(clf: LinearClassifier, X: np.ndarray, y: np.ndarray) -> float:
    """Mean logistic loss plus (l2/2)||w||^2; the bias is unpenalized."""
    z = X @ clf.weights + clf.bias
    bce = np.logaddexp(0.0, z) - y * z
    return float(np.mean(bce) + 0.5 * clf.l2 * (clf.weights @ clf.weights))


def train_classifier(
    features: np.ndarray,
    labels: np.ndarray,
    l2: float = 1e-4,
    learning_rate: float = 0.1,
    epochs: int = 500,
    seed: int = 0,
) -> LinearClassifier:
    """Full-batch gradient descent on L2-regularized logistic loss.

    Weights start at zero, so the procedure is deterministic regardless of
    example order; ``seed`` is accepted for uniform call sites but drawn
    on by nothing here.
    """
    del seed
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError("features must be a 2-D matrix")
    if y.shape != (X.shape[0],):
        raise DimensionError("one label per feature row required")
    if not (np.any(y == 1.0) and np.any(y == 0.0)):
        raise DegenerateTrainingError("training data must contain both classes")
    if l2 < 0 or learning_rate < 0 or epochs < 0:
        raise SignedLfmError("l2, learning_rate and epochs must be >= 0")
    n = X.shape[0]
    clf = LinearClassifier(weights=np.zeros(X.shape[1]), bias=0.0, l2=l2)
    for _ in range(epochs):
        p = clf.predict_many(X)
        err = p - y
        grad_w = X.T @ err / n + l2 * clf.weights
        grad_b = float(np.mean(err))
        clf.weights -= learning_rate * grad_w
        clf.bias -= learning_rate * grad_b
    return clf


def concat_features(
    model_a: FactorModel,
    model_b: FactorModel,
    kind: OperatorKind,
    u: int,
    t: int,
) -> np.ndarray:
    """Operator output of both models, concatenated (combined-method
    features)."""
    return np.concatenate(
        [apply_operator(kind, model_a, u, t), apply_operator(kind, model_b, u, t)]
    )


@dataclass(frozen=True)
class Threshold:
    tau: float = 0.5


@dataclass(frozen=True)
class TopK:
    k: int


DecisionPolicy = Threshold | TopK


def decide(scores: np.ndarray, policy: DecisionPolicy) -> np.ndarray:
    """Binary spam decisions (1 = spam) from per-edge scores.

    Threshold: spam iff score >= tau.  TopK: spam for the k largest
    scores, ties broken toward lower edge positions.
    """
    s = np.asarray(scores, dtype=np.float64)
    if isinstance(policy, Threshold):
        return (s >= policy.tau).astype(np.int64)
    if isinstance(policy, TopK):
        if not (0 <= policy.k <= s.size):
            raise SignedLfmError(f"top_k must be in [0, {s.size}], got {policy.k}")
        decisions = np.zeros(s.size, dtype=np.int64)
        if policy.k:
            # stable sort on -score keeps earlier edges ahead on ties
            order = np.argsort(-s, kind="stable")
            decisions[order[: policy.k]] = 1
        return decisions
    raise SignedLfmError(f"unknown decision policy {policy!r}")
