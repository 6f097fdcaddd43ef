"""K-nearest-neighbors classifier with uniform weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._serial import write_container
from ..errors import ValidationError


@dataclass(frozen=True)
class KNNModel:
    KIND = "knn"

    X: np.ndarray
    y: np.ndarray
    sentence_ids: tuple[str, ...]
    k: int

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def predict_codes(self, X: np.ndarray) -> np.ndarray:
        n_classes = 4
        out = np.empty(len(X), dtype=np.int64)
        for r in range(len(X)):
            d2 = ((self.X - X[r]) ** 2).sum(axis=1)
            # Stable sort: distance ties resolve to the lower training row,
            # which is fixed by the canonical sentence_id order.
            neigh = np.argsort(d2, kind="stable")[: self.k]
            labels = self.y[neigh]
            votes = np.bincount(labels, minlength=n_classes)
            best = votes.max()
            tied = np.flatnonzero(votes == best)
            if len(tied) == 1:
                out[r] = tied[0]
                continue
            # Tie: smallest summed distance among tied classes, then class
            # order (argmin returns the first minimum and tied classes are
            # already in class order).
            sums = np.array([d2[neigh[labels == c]].sum() for c in tied])
            out[r] = tied[int(np.argmin(sums))]
        return out

    def save(self, path) -> None:
        header = {"kind": self.KIND, "k": self.k, "dim": int(self.dim),
                  "sentence_ids": list(self.sentence_ids)}
        write_container(path, header, {"X": self.X, "y": self.y})

    @classmethod
    def from_container(cls, header: dict, arrays: dict) -> "KNNModel":
        return cls(
            X=arrays["X"],
            y=arrays["y"],
            sentence_ids=tuple(header["sentence_ids"]),
            k=header["k"],
        )


def train_knn(features, k: int = 7) -> KNNModel:
    """Store the training set; prediction votes uniformly over the k nearest
    by Euclidean distance."""
    from . import canonicalize

    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if len(features) < k:
        raise ValidationError(
            f"need at least k={k} training rows, got {len(features)}"
        )
    feats = canonicalize(features)
    return KNNModel(X=feats.X.copy(), y=feats.y.copy(), sentence_ids=feats.sentence_ids, k=k)
