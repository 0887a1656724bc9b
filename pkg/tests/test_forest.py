import numpy as np
import pytest

from subqe import forest as F
from subqe.errors import SingleClassData
from subqe.forest import DecisionTree, ForestParams, train_rfc


def _separable(n=200, seed=0):
    """Two clusters split cleanly on feature 0."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 5))
    y = (X[:, 0] > 0).astype(int)
    X[:, 0] += np.where(y, 2.0, -2.0)
    return X, y


def _noisy(n=400, seed=1):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 8))
    logits = X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.5, size=n)
    return X, (logits > 0).astype(int)


class TestTraining:
    def test_separable_perfect_train(self):
        X, y = _separable()
        model = train_rfc(X, y, ForestParams(n_trees=15), seed=0)
        assert np.array_equal(F.rfc_scores(model, X) > 0.5, y.astype(bool))

    def test_single_class_rejected(self):
        X = np.random.default_rng(0).normal(size=(20, 3))
        with pytest.raises(SingleClassData):
            train_rfc(X, np.ones(20), seed=0)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            train_rfc(np.zeros((4, 3)), np.array([0, 1]))

    def test_same_seed_identical(self):
        X, y = _noisy()
        a = train_rfc(X, y, ForestParams(n_trees=8), seed=3)
        b = train_rfc(X, y, ForestParams(n_trees=8), seed=3)
        for ta, tb in zip(a.trees, b.trees):
            np.testing.assert_array_equal(ta.feature, tb.feature)
            np.testing.assert_array_equal(ta.threshold, tb.threshold)
            np.testing.assert_array_equal(ta.counts, tb.counts)

    def test_different_seeds_differ(self):
        X, y = _noisy()
        a = train_rfc(X, y, ForestParams(n_trees=4), seed=3)
        b = train_rfc(X, y, ForestParams(n_trees=4), seed=4)
        same = all(
            ta.feature.shape == tb.feature.shape
            and np.array_equal(ta.feature, tb.feature)
            for ta, tb in zip(a.trees, b.trees)
        )
        assert not same

    def test_max_depth_respected(self):
        X, y = _noisy()
        model = train_rfc(X, y, ForestParams(n_trees=3, max_depth=2), seed=0)
        for tree in model.trees:
            # depth<=2 means at most 1 + 2 + 4 = 7 nodes
            assert len(tree.feature) <= 7

    def test_min_samples_leaf(self):
        X, y = _noisy()
        model = train_rfc(X, y, ForestParams(n_trees=3, min_samples_leaf=30), seed=0)
        for tree in model.trees:
            leaves = tree.counts[tree.feature < 0]
            assert (leaves.sum(axis=1) >= 30).all()


class TestScore:
    def test_score_is_vote_fraction(self):
        X, y = _noisy(200)
        model = train_rfc(X, y, ForestParams(n_trees=9), seed=2)
        for i in range(10):
            votes = sum(t.predict_one(X[i]) for t in model.trees)
            assert F.rfc_score(model, X[i]) == pytest.approx(votes / 9)

    def test_batch_matches_single(self):
        X, y = _noisy(100)
        model = train_rfc(X, y, ForestParams(n_trees=5), seed=2)
        batch = F.rfc_scores(model, X[:20])
        singles = [F.rfc_score(model, x) for x in X[:20]]
        np.testing.assert_allclose(batch, singles)

    def test_scores_in_unit_interval(self):
        X, y = _noisy(100)
        model = train_rfc(X, y, ForestParams(n_trees=7), seed=5)
        s = F.rfc_scores(model, X)
        assert np.all((0 <= s) & (s <= 1))


class TestSplit:
    def test_best_split_on_clean_feature(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 0, 1, 1])
        best = F._best_split(X, y, np.arange(4), [0], 1, None)
        f, thr, gain = best
        assert f == 0
        assert thr == pytest.approx(1.5)
        assert gain == pytest.approx(0.5)  # parent gini 0.5 -> 0

    def test_no_split_when_constant(self):
        X = np.ones((6, 2))
        y = np.array([0, 1, 0, 1, 0, 1])
        assert F._best_split(X, y, np.arange(6), [0, 1], 1, None) is None

    def test_split_never_worsens_gini(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(4, 40))
            X = rng.normal(size=(n, 3))
            y = rng.integers(0, 2, n)
            if len(np.unique(y)) < 2:
                continue
            best = F._best_split(X, y, np.arange(n), [0, 1, 2], 1, None)
            if best is not None:
                assert best[2] > 0


class TestImportance:
    def test_sums_to_one(self):
        X, y = _noisy()
        model = train_rfc(X, y, ForestParams(n_trees=6), seed=0)
        imp = F.feature_importance(model)
        assert imp.shape == (8,)
        assert imp.sum() == pytest.approx(1.0)
        assert (imp >= 0).all()

    def test_informative_feature_ranks_first(self):
        X, y = _separable(400)
        model = train_rfc(X, y, ForestParams(n_trees=10), seed=0)
        imp = F.feature_importance(model)
        assert int(np.argmax(imp)) == 0

    def test_grouped_importance_full_dim(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(80, F.FEATURE_DIM))
        y = (X[:, 0] > 0).astype(int)
        model = train_rfc(X, y, ForestParams(n_trees=4), seed=0)
        grouped = F.grouped_importance(model)
        assert set(grouped) == {"average_similarity", "similarity",
                                "ngram_frequency", "structural"}
        assert sum(grouped.values()) == pytest.approx(1.0)


class TestPersistence:
    def test_roundtrip(self, tmp_path):
        X, y = _noisy(150)
        model = train_rfc(X, y, ForestParams(n_trees=5, max_depth=6), seed=9)
        path = tmp_path / "rfc.npz"
        F.save_forest(model, path)
        back = F.load_forest(path)
        assert back.seed == 9
        assert back.params == model.params
        np.testing.assert_allclose(F.rfc_scores(back, X), F.rfc_scores(model, X))
        np.testing.assert_allclose(back.importances_, model.importances_)

    def test_version_check(self, tmp_path):
        X, y = _noisy(50)
        model = train_rfc(X, y, ForestParams(n_trees=2), seed=0)
        path = tmp_path / "rfc.npz"
        F.save_forest(model, path)
        data = dict(np.load(path))
        data["version"] = np.array(99)
        np.savez_compressed(path, **data)
        with pytest.raises(ValueError):
            F.load_forest(path)


class TestTreePredict:
    def test_hand_tree(self):
        # root splits x0 <= 0.5; left leaf negative, right leaf positive
        tree = DecisionTree(
            feature=np.array([0, -1, -1], dtype=np.int32),
            threshold=np.array([0.5, 0.0, 0.0]),
            left=np.array([1, -1, -1], dtype=np.int32),
            right=np.array([2, -1, -1], dtype=np.int32),
            counts=np.array([[5, 5], [5, 0], [0, 5]]),
        )
        X = np.array([[0.0], [0.5], [0.6], [2.0]])
        np.testing.assert_array_equal(tree.predict(X), [0, 0, 1, 1])
        assert tree.predict_one(np.array([0.4])) == 0
        assert tree.predict_one(np.array([0.9])) == 1
