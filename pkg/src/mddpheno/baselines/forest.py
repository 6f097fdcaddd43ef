"""Random forest of Gini-impurity CART trees on bootstrap samples.

Each tree draws sqrt(dim) candidate features per split; when none of the
candidates yields a positive impurity decrease the splitter falls back to
scanning the remaining features, so trees on consistent data always reach
purity.  Per-tree random streams are spawned from the forest seed keyed by
tree index, which keeps sequential and parallel growth identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._serial import write_container
from ..errors import ValidationError

_N_CLASSES = 4
_EPS = 1e-12


@dataclass(frozen=True)
class _Tree:
    feature: np.ndarray  # int32, -1 for leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    leaf_class: np.ndarray  # int8, -1 for internal nodes

    def predict_codes(self, X: np.ndarray) -> np.ndarray:
        pos = np.zeros(len(X), dtype=np.int64)
        while True:
            feat = self.feature[pos]
            active = feat >= 0
            if not np.any(active):
                return self.leaf_class[pos].astype(np.int64)
            rows = np.flatnonzero(active)
            go_left = X[rows, feat[rows]] <= self.threshold[pos[rows]]
            nxt = np.where(go_left, self.left[pos[rows]], self.right[pos[rows]])
            pos[rows] = nxt


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float(p @ p)


def _best_split_for_feature(values: np.ndarray, y: np.ndarray, parent_gini: float):
    """Best (gain, threshold) for one feature, or None when unsplittable."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    labels = y[order]
    n = len(v)
    onehot = np.zeros((n, _N_CLASSES))
    onehot[np.arange(n), labels] = 1.0
    left_cum = np.cumsum(onehot, axis=0)
    total = left_cum[-1]

    boundaries = np.flatnonzero(v[:-1] < v[1:]) + 1  # split between i-1 and i
    if len(boundaries) == 0:
        return None
    left = left_cum[boundaries - 1]
    right = total - left
    n_left = left.sum(axis=1)
    n_right = n - n_left
    gini_left = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
    gini_right = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
    children = (n_left * gini_left + n_right * gini_right) / n
    gains = parent_gini - children
    best = int(np.argmax(gains))
    gain = float(gains[best])
    if gain <= _EPS:
        return None
    b = boundaries[best]
    threshold = (v[b - 1] + v[b]) / 2.0
    return gain, threshold


def _grow_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, mtry: int) -> _Tree:
    feature, threshold, left, right, leaf_class = [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_class.append(-1)
        return len(feature) - 1

    def majority(labels: np.ndarray) -> int:
        return int(np.argmax(np.bincount(labels, minlength=_N_CLASSES)))

    root = new_node()
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        labels = y[idx]
        first = labels[0]
        if len(idx) < 2 or np.all(labels == first):
            leaf_class[node] = majority(labels) if len(idx) else 0
            continue
        parent_gini = _gini(np.bincount(labels, minlength=_N_CLASSES))
        perm = rng.permutation(X.shape[1])
        best = None  # (gain, feat, threshold)
        for rank, f in enumerate(perm):
            if rank >= mtry and best is not None:
                break
            found = _best_split_for_feature(X[idx, f], labels, parent_gini)
            if found is not None:
                gain, thr = found
                if best is None or gain > best[0]:
                    best = (gain, int(f), thr)
        if best is None:
            leaf_class[node] = majority(labels)
            continue
        _, f, thr = best
        mask = X[idx, f] <= thr
        left_idx, right_idx = idx[mask], idx[~mask]
        feature[node] = f
        threshold[node] = thr
        lnode, rnode = new_node(), new_node()
        left[node], right[node] = lnode, rnode
        stack.append((rnode, right_idx))
        stack.append((lnode, left_idx))

    return _Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        leaf_class=np.asarray(leaf_class, dtype=np.int8),
    )


@dataclass(frozen=True)
class RandomForestModel:
    KIND = "random_forest"

    trees: tuple[_Tree, ...]
    n_features: int
    n_trees: int
    seed: int
    bootstrap: bool

    @property
    def dim(self) -> int:
        return self.n_features

    def predict_codes(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros((len(X), _N_CLASSES), dtype=np.int64)
        for tree in self.trees:
            preds = tree.predict_codes(X)
            votes[np.arange(len(X)), preds] += 1
        # argmax keeps the first maximum => class-order tie-breaking.
        return np.argmax(votes, axis=1).astype(np.int64)

    def save(self, path) -> None:
        header = {
            "kind": self.KIND,
            "n_trees": self.n_trees,
            "n_features": self.n_features,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
            "nodes_per_tree": [len(t.feature) for t in self.trees],
        }
        arrays = {
            "feature": np.concatenate([t.feature for t in self.trees]),
            "threshold": np.concatenate([t.threshold for t in self.trees]),
            "left": np.concatenate([t.left for t in self.trees]),
            "right": np.concatenate([t.right for t in self.trees]),
            "leaf_class": np.concatenate([t.leaf_class for t in self.trees]),
        }
        write_container(path, header, arrays)

    @classmethod
    def from_container(cls, header: dict, arrays: dict) -> "RandomForestModel":
        trees = []
        offset = 0
        for count in header["nodes_per_tree"]:
            sl = slice(offset, offset + count)
            trees.append(
                _Tree(
                    feature=arrays["feature"][sl],
                    threshold=arrays["threshold"][sl],
                    left=arrays["left"][sl],
                    right=arrays["right"][sl],
                    leaf_class=arrays["leaf_class"][sl],
                )
            )
            offset += count
        return cls(
            trees=tuple(trees),
            n_features=header["n_features"],
            n_trees=header["n_trees"],
            seed=header["seed"],
            bootstrap=header["bootstrap"],
        )


def train_random_forest(
    features, n_trees: int = 100, seed: int = 0, bootstrap: bool = True
) -> RandomForestModel:
    """Grow n_trees Gini CART trees on bootstrap samples of the features."""
    from . import canonicalize

    if n_trees < 1:
        raise ValidationError(f"n_trees must be >= 1, got {n_trees}")
    if len(features) == 0:
        raise ValidationError("cannot train a forest on an empty feature matrix")
    feats = canonicalize(features)
    X, y = feats.X, feats.y
    mtry = max(1, int(np.sqrt(X.shape[1])))
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(seeds[t])
        if bootstrap:
            idx = rng.integers(0, len(X), size=len(X))
        else:
            idx = np.arange(len(X))
        trees.append(_grow_tree(X[idx], y[idx], rng, mtry))
    return RandomForestModel(
        trees=tuple(trees),
        n_features=X.shape[1],
        n_trees=n_trees,
        seed=seed,
        bootstrap=bootstrap,
    )
