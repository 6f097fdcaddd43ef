"""One-vs-rest linear SVM trained by Pegasos-style subgradient descent.

Objective per binary problem: 0.5 * ||w||^2 + C * sum_i hinge(y_i * (w.x_i + b)).
The bias rides along as an augmented constant feature (so it is mildly
regularized, the usual Pegasos compromise).  Training is full-batch by
default, which makes it deterministic and invariant to duplicating every
training point with a correspondingly halved C.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._serial import write_container
from ..errors import ValidationError


@dataclass(frozen=True)
class LinearSVMModel:
    KIND = "linear_svm"

    weights: np.ndarray  # n_classes x dim
    biases: np.ndarray  # n_classes
    C: float
    steps: int
    seed: int

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights.T + self.biases

    def predict_codes(self, X: np.ndarray) -> np.ndarray:
        # argmax keeps the first maximum, i.e. class-order tie-breaking.
        return np.argmax(self.decision_scores(X), axis=1).astype(np.int64)

    def save(self, path) -> None:
        header = {
            "kind": self.KIND,
            "C": self.C,
            "steps": self.steps,
            "seed": self.seed,
            "dim": int(self.dim),
        }
        write_container(path, header, {"weights": self.weights, "biases": self.biases})

    @classmethod
    def from_container(cls, header: dict, arrays: dict) -> "LinearSVMModel":
        return cls(
            weights=arrays["weights"],
            biases=arrays["biases"],
            C=header["C"],
            steps=header["steps"],
            seed=header["seed"],
        )


def svm_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float) -> float:
    """Regularized hinge objective for one binary problem (y in {-1,+1})."""
    margins = y * (X @ w + b)
    return 0.5 * (w @ w + b * b) + C * np.maximum(0.0, 1.0 - margins).sum()


def _train_binary(Xa: np.ndarray, y: np.ndarray, C: float, steps: int) -> np.ndarray:
    # Returns the tail-averaged iterate (mean of the last half of the
    # trajectory), which converges much faster than the final iterate and
    # keeps the duplicated-data/halved-C invariance exactly.
    n = len(Xa)
    lam = 1.0 / (C * n)
    w = np.zeros(Xa.shape[1])
    averaged = np.zeros_like(w)
    tail = 0
    for t in range(1, steps + 1):
        eta = 1.0 / (lam * t)
        margins = y * (Xa @ w)
        viol = margins < 1.0
        if np.any(viol):
            grad_mean = (y[viol, None] * Xa[viol]).sum(axis=0) / n
        else:
            grad_mean = np.zeros_like(w)
        w = (1.0 - eta * lam) * w + eta * grad_mean
        if t > steps // 2:
            averaged += w
            tail += 1
    return averaged / tail


def train_linear_svm(
    features, C: float = 1.0, steps: int = 1000, seed: int = 0
) -> LinearSVMModel:
    """Train four one-vs-rest hinge classifiers; predict by argmax score."""
    from . import canonicalize

    if C <= 0:
        raise ValidationError(f"C must be positive, got {C}")
    if len(set(features.y.tolist())) < 2:
        raise ValidationError("SVM training requires at least two classes")
    feats = canonicalize(features)
    Xa = np.hstack([feats.X, np.ones((len(feats), 1))])
    n_classes = 4
    weights = np.zeros((n_classes, feats.X.shape[1]))
    biases = np.zeros(n_classes)
    for c in range(n_classes):
        y = np.where(feats.y == c, 1.0, -1.0)
        w = _train_binary(Xa, y, C, steps)
        weights[c] = w[:-1]
        biases[c] = w[-1]
    return LinearSVMModel(weights=weights, biases=biases, C=C, steps=steps, seed=seed)
