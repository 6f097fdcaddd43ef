"""Baseline classifiers over pooled sentence embeddings.

All three models share the FeatureMatrix input, predict into the fixed
class order (unknown, positive, possible, negated), and serialize to the
same self-describing container format.  Training canonicalizes row order
by sentence_id before any seeded sampling, so model parameters are
invariant under permutations of the training rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._serial import read_container
from ..dataset import LabeledSet
from ..embeddings import EmbeddingModel, embed_sentence
from ..errors import ValidationError
from ..rules import CLASS_INDEX, CLASS_ORDER, Label


@dataclass(frozen=True)
class FeatureMatrix:
    """n x dim feature rows with aligned label codes and sentence ids."""

    X: np.ndarray
    y: np.ndarray  # int codes into CLASS_ORDER
    sentence_ids: tuple[str, ...]

    def __post_init__(self):
        if self.X.ndim != 2:
            raise ValidationError("feature matrix must be 2-dimensional")
        if not (len(self.X) == len(self.y) == len(self.sentence_ids)):
            raise ValidationError("feature rows, labels, and ids must align")
        if len(self.X) and not np.all(np.isfinite(self.X)):
            raise ValidationError("feature matrix contains non-finite values")

    def __len__(self):
        return len(self.X)

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def features_from_dataset(labeled: LabeledSet, model: EmbeddingModel) -> FeatureMatrix:
    """Embed every sentence of a labeled set into a feature matrix."""
    n = len(labeled)
    X = np.zeros((n, model.config.dim))
    y = np.zeros(n, dtype=np.int64)
    ids = []
    for i, s in enumerate(labeled):
        X[i] = embed_sentence(model, s.text)
        y[i] = CLASS_INDEX[s.label]
        ids.append(s.sentence_id)
    return FeatureMatrix(X=X, y=y, sentence_ids=tuple(ids))


def canonicalize(features: FeatureMatrix) -> FeatureMatrix:
    """Sort rows by sentence_id so seeded sampling ignores input order."""
    order = sorted(range(len(features)), key=lambda i: features.sentence_ids[i])
    idx = np.asarray(order, dtype=np.intp)
    return FeatureMatrix(
        X=features.X[idx],
        y=features.y[idx],
        sentence_ids=tuple(features.sentence_ids[i] for i in order),
    )


def codes_to_labels(codes: np.ndarray) -> list[Label]:
    return [CLASS_ORDER[int(c)] for c in codes]


def predict(model, features) -> list[Label]:
    """Predict one label per row; accepts a FeatureMatrix or raw matrix."""
    X = features.X if isinstance(features, FeatureMatrix) else np.asarray(features)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValidationError(
            f"feature dimension {X.shape[1] if X.ndim == 2 else X.shape} "
            f"does not match model dimension {model.dim}"
        )
    return codes_to_labels(model.predict_codes(X))


def load_model(path):
    """Load any classifier model file, dispatching on its header kind."""
    from .forest import RandomForestModel
    from .knn import KNNModel
    from .svm import LinearSVMModel

    header, arrays = read_container(path)
    kind = header.get("kind")
    for cls in (KNNModel, LinearSVMModel, RandomForestModel):
        if kind == cls.KIND:
            return cls.from_container(header, arrays)
    raise ValidationError(f"{path}: unknown model kind {kind!r}")


from .forest import RandomForestModel, train_random_forest  # noqa: E402
from .knn import KNNModel, train_knn  # noqa: E402
from .svm import LinearSVMModel, train_linear_svm  # noqa: E402

__all__ = [
    "FeatureMatrix",
    "KNNModel",
    "LinearSVMModel",
    "RandomForestModel",
    "canonicalize",
    "codes_to_labels",
    "features_from_dataset",
    "load_model",
    "predict",
    "train_knn",
    "train_linear_svm",
    "train_random_forest",
]
