import numpy as np
import pytest

from mddpheno.baselines import (
    FeatureMatrix,
    load_model,
    predict,
    train_knn,
    train_linear_svm,
    train_random_forest,
)
from mddpheno.baselines.svm import svm_objective
from mddpheno.errors import ValidationError
from mddpheno.rules import CLASS_ORDER, Label


def fm(X, y, ids=None):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if ids is None:
        ids = tuple(f"s#{i:04d}" for i in range(len(X)))
    return FeatureMatrix(X=X, y=y, sentence_ids=tuple(ids))


def cluster_data(n_per_class=40, dim=6, spread=0.3, seed=0, classes=(0, 1, 2, 3)):
    rng = np.random.default_rng(seed)
    centers = rng.normal(0, 4.0, (4, dim))
    X, y = [], []
    for c in classes:
        X.append(centers[c] + rng.normal(0, spread, (n_per_class, dim)))
        y.extend([c] * n_per_class)
    return fm(np.vstack(X), y)


class TestKNN:
    def test_k1_self_prediction(self):
        feats = cluster_data(n_per_class=10)
        model = train_knn(feats, k=1)
        assert predict(model, feats) == [CLASS_ORDER[c] for c in feats.y]

    def test_toy_majority(self):
        feats = fm([[0, 0], [0, 1], [5, 5]], [1, 1, 2])
        model = train_knn(feats, k=3)
        pred = predict(model, fm([[0, 0.5]], [0]))
        assert pred == [Label.POSITIVE]

    def test_n_smaller_than_k_errors(self):
        with pytest.raises(ValidationError):
            train_knn(fm(np.zeros((6, 2)), [0] * 6), k=7)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(3)
        train = fm(rng.normal(0, 1, (120, 5)), rng.integers(0, 4, 120))
        queries = rng.normal(0, 1, (40, 5))
        model = train_knn(train, k=7)
        got = model.predict_codes(queries)

        # independent oracle: python loops, explicit tie rules
        Xs = model.X
        ys = model.y
        for r in range(len(queries)):
            dists = [(float(((Xs[i] - queries[r]) ** 2).sum()), i) for i in range(len(Xs))]
            dists.sort(key=lambda t: (t[0], t[1]))
            top = dists[:7]
            votes = {}
            for d, i in top:
                votes.setdefault(int(ys[i]), []).append(d)
            best = max(len(v) for v in votes.values())
            tied = sorted(c for c, v in votes.items() if len(v) == best)
            if len(tied) > 1:
                sums = {c: sum(votes[c]) for c in tied}
                m = min(sums.values())
                tied = sorted(c for c in tied if sums[c] == m)
            assert got[r] == tied[0]

    def test_dimension_mismatch(self):
        model = train_knn(fm(np.zeros((8, 3)), [0, 1] * 4), k=2)
        with pytest.raises(ValidationError):
            predict(model, fm(np.zeros((2, 2)), [0, 0]))

    def test_row_permutation_invariance(self):
        feats = cluster_data(n_per_class=15, seed=8)
        perm = np.random.default_rng(1).permutation(len(feats))
        shuffled = FeatureMatrix(
            X=feats.X[perm],
            y=feats.y[perm],
            sentence_ids=tuple(feats.sentence_ids[i] for i in perm),
        )
        q = np.random.default_rng(2).normal(0, 3, (25, feats.dim))
        a = train_knn(feats, k=5).predict_codes(q)
        b = train_knn(shuffled, k=5).predict_codes(q)
        assert np.array_equal(a, b)


class TestLinearSVM:
    def separable(self):
        # generous margins: margin >= 1 achievable with small ||w||
        rng = np.random.default_rng(0)
        a = rng.normal(0, 0.3, (30, 4)) + np.array([4.0, 0, 0, 0])
        b = rng.normal(0, 0.3, (30, 4)) + np.array([-4.0, 0, 0, 0])
        return fm(np.vstack([a, b]), [1] * 30 + [2] * 30)

    def test_separable_training_accuracy_one(self):
        feats = self.separable()
        model = train_linear_svm(feats, C=1.0, steps=2000)
        assert predict(model, feats) == [CLASS_ORDER[c] for c in feats.y]

    def test_objective_beats_zero_vector(self):
        feats = self.separable()
        model = train_linear_svm(feats, C=1.0, steps=500)
        for c in (1, 2):
            y = np.where(feats.y == c, 1.0, -1.0)
            trained = svm_objective(model.weights[c], model.biases[c], feats.X, y, 1.0)
            at_zero = svm_objective(np.zeros(feats.dim), 0.0, feats.X, y, 1.0)
            assert at_zero == pytest.approx(1.0 * len(feats))
            assert trained < at_zero

    def test_duplication_with_halved_C(self):
        feats = self.separable()
        doubled = fm(
            np.vstack([feats.X, feats.X]),
            np.concatenate([feats.y, feats.y]),
            ids=tuple(list(feats.sentence_ids) + [f"z#{i:04d}" for i in range(len(feats))]),
        )
        m1 = train_linear_svm(feats, C=1.0, steps=800)
        m2 = train_linear_svm(doubled, C=0.5, steps=800)
        np.testing.assert_allclose(m1.weights, m2.weights, atol=1e-6)
        np.testing.assert_allclose(m1.biases, m2.biases, atol=1e-6)

    def test_single_class_errors(self):
        with pytest.raises(ValidationError):
            train_linear_svm(fm(np.zeros((10, 2)), [1] * 10), C=1.0)

    def test_zero_features_predict_largest_bias(self):
        feats = cluster_data(n_per_class=20, seed=4)
        model = train_linear_svm(feats, steps=300)
        pred = model.predict_codes(np.zeros((1, feats.dim)))
        assert pred[0] == int(np.argmax(model.biases))

    def test_bad_C(self):
        with pytest.raises(ValidationError):
            train_linear_svm(cluster_data(n_per_class=5), C=0.0)


class TestRandomForest:
    def test_single_tree_memorizes_consistent_data(self):
        feats = cluster_data(n_per_class=25, dim=5, spread=1.0, seed=6)
        model = train_random_forest(feats, n_trees=1, seed=0, bootstrap=False)
        assert np.array_equal(model.predict_codes(feats.X), feats.y)

    def test_same_seed_identical(self):
        feats = cluster_data(n_per_class=20, seed=5)
        a = train_random_forest(feats, n_trees=10, seed=3)
        b = train_random_forest(feats, n_trees=10, seed=3)
        q = np.random.default_rng(7).normal(0, 3, (30, feats.dim))
        assert np.array_equal(a.predict_codes(q), b.predict_codes(q))
        for ta, tb in zip(a.trees, b.trees):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.threshold, tb.threshold)

    def test_informative_feature_dominates_roots(self):
        # feature 0 alone separates the classes; the rest are constant, so
        # every tree's candidate scan must fall through to feature 0.
        rng = np.random.default_rng(11)
        n = 80
        X = np.zeros((n, 6))
        y = np.array([0, 1, 2, 3] * (n // 4))
        X[:, 0] = y * 10.0 + rng.normal(0, 0.1, n)
        feats = fm(X, y)
        model = train_random_forest(feats, n_trees=25, seed=2)
        roots_on_zero = sum(1 for t in model.trees if t.feature[0] == 0)
        assert roots_on_zero == 25
        assert np.array_equal(model.predict_codes(X), y)

    def test_root_split_matches_exhaustive_gain_scan(self):
        # single feature => the candidate set is the whole feature set, so
        # the root threshold must equal the brute-force best-gain midpoint
        rng = np.random.default_rng(13)
        n = 60
        X = rng.normal(0, 1.0, (n, 1))
        y = ((X[:, 0] > -0.4).astype(np.int64) + (X[:, 0] > 0.7).astype(np.int64))
        feats = fm(X, y)
        model = train_random_forest(feats, n_trees=1, seed=0, bootstrap=False)
        tree = model.trees[0]

        def gini(labels):
            counts = np.bincount(labels, minlength=4)
            p = counts / counts.sum()
            return 1.0 - float(p @ p)

        best = (-1.0, None)
        parent = gini(y)
        vals = np.sort(np.unique(X[:, 0]))
        for a, b in zip(vals, vals[1:]):
            thr = (a + b) / 2
            left = y[X[:, 0] <= thr]
            right = y[X[:, 0] > thr]
            gain = parent - (len(left) * gini(left) + len(right) * gini(right)) / n
            if gain > best[0]:
                best = (gain, thr)
        assert tree.feature[0] == 0
        assert tree.threshold[0] == pytest.approx(best[1])

    def test_empty_features_error(self):
        with pytest.raises(ValidationError):
            train_random_forest(fm(np.zeros((0, 3)), []), n_trees=2)

    def test_row_permutation_invariance(self):
        feats = cluster_data(n_per_class=15, seed=9)
        perm = np.random.default_rng(4).permutation(len(feats))
        shuffled = FeatureMatrix(
            X=feats.X[perm],
            y=feats.y[perm],
            sentence_ids=tuple(feats.sentence_ids[i] for i in perm),
        )
        q = np.random.default_rng(5).normal(0, 3, (20, feats.dim))
        a = train_random_forest(feats, n_trees=8, seed=1).predict_codes(q)
        b = train_random_forest(shuffled, n_trees=8, seed=1).predict_codes(q)
        assert np.array_equal(a, b)


class TestSerialization:
    @pytest.mark.parametrize("kind", ["knn", "svm", "rf"])
    def test_save_load_predict_identical(self, tmp_path, kind):
        feats = cluster_data(n_per_class=15, seed=10)
        if kind == "knn":
            model = train_knn(feats, k=3)
        elif kind == "svm":
            model = train_linear_svm(feats, steps=200)
        else:
            model = train_random_forest(feats, n_trees=5, seed=0)
        q = np.random.default_rng(6).normal(0, 3, (15, feats.dim))
        before = model.predict_codes(q)
        path = tmp_path / f"{kind}.model"
        model.save(path)
        loaded = load_model(path)
        assert np.array_equal(loaded.predict_codes(q), before)


class TestBeatsMajority:
    def test_all_three_beat_majority_on_separable_data(self):
        both = cluster_data(n_per_class=50, dim=8, spread=0.5, seed=12)
        train_rows = np.concatenate([np.arange(c * 50, c * 50 + 30) for c in range(4)])
        test_rows = np.concatenate([np.arange(c * 50 + 30, (c + 1) * 50) for c in range(4)])
        feats = fm(both.X[train_rows], both.y[train_rows])
        test = fm(both.X[test_rows], both.y[test_rows])
        majority = max(np.bincount(feats.y)) / len(feats)
        for model in (
            train_knn(feats, k=7),
            train_linear_svm(feats, steps=500),
            train_random_forest(feats, n_trees=20, seed=1),
        ):
            acc = np.mean(model.predict_codes(test.X) == test.y)
            assert acc > majority
