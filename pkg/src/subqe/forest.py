"""Binary random forest (CART, Gini splits) over translation feature vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingleClassData
from .features import FEATURE_DIM, feature_layout

FOREST_FORMAT_VERSION = 1


@dataclass
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: int | None = None  # default ceil(sqrt(n_features))

    def resolve_mtry(self, n_features: int) -> int:
        if self.features_per_split is not None:
            return min(self.features_per_split, n_features)
        return math.ceil(math.sqrt(n_features))


@dataclass
class DecisionTree:
    """Flattened binary tree; leaves have feature == -1 and class counts."""

    feature: np.ndarray  # (n_nodes,) int, -1 for leaf
    threshold: np.ndarray  # (n_nodes,) float
    left: np.ndarray  # (n_nodes,) int child ids, -1 for leaf
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) class counts of training samples

    def predict_one(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        c = self.counts[node]
        return int(c[1] > c[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[idx]
            rows = np.flatnonzero(f >= 0)
            if rows.size == 0:
                break
            vals = X[rows, f[rows]]
            go_left = vals <= self.threshold[idx[rows]]
            idx[rows] = np.where(go_left, self.left[idx[rows]], self.right[idx[rows]])
        c = self.counts[idx]
        return (c[:, 1] > c[:, 0]).astype(int)


@dataclass
class RandomForestModel:
    trees: list[DecisionTree]
    params: ForestParams
    seed: int
    n_features: int = FEATURE_DIM
    importances_: np.ndarray | None = field(default=None, repr=False)


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def _best_split(X, y, idx, feat_candidates, min_leaf, rng):
    """Best (feature, threshold, gain) among candidates, or None."""
    n = idx.size
    y_node = y[idx]
    total_pos = int(y_node.sum())
    parent_counts = np.array([n - total_pos, total_pos], dtype=float)
    parent_gini = _gini(parent_counts)
    best = None
    for f in feat_candidates:
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        v = vals[order]
        ys = y_node[order]
        # split after position i puts i+1 samples left
        pos_prefix = np.cumsum(ys)
        i = np.arange(1, n)
        valid = v[1:] != v[:-1]
        valid &= (i >= min_leaf) & (n - i >= min_leaf)
        if not valid.any():
            continue
        left_n = i[valid].astype(float)
        right_n = n - left_n
        left_pos = pos_prefix[:-1][valid].astype(float)
        right_pos = total_pos - left_pos
        gini_left = 1.0 - ((left_pos / left_n) ** 2 + ((left_n - left_pos) / left_n) ** 2)
        gini_right = 1.0 - ((right_pos / right_n) ** 2 + ((right_n - right_pos) / right_n) ** 2)
        weighted = (left_n * gini_left + right_n * gini_right) / n
        k = int(np.argmin(weighted))
        gain = parent_gini - float(weighted[k])
        if gain <= 1e-12:
            continue
        cut = i[valid][k]
        thr = 0.5 * (v[cut - 1] + v[cut])
        if thr == v[cut]:  # numeric collapse, split on the lower value
            thr = v[cut - 1]
        if best is None or gain > best[2]:
            best = (f, float(thr), gain)
    return best


def _grow_tree(X, y, params: ForestParams, rng: np.random.Generator) -> DecisionTree:
    mtry = params.resolve_mtry(X.shape[1])
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((0, 0))
        return len(feature) - 1

    stack = [(new_node(), np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        pos = int(y[idx].sum())
        counts[node] = (idx.size - pos, pos)
        if (
            pos == 0
            or pos == idx.size
            or idx.size < 2 * params.min_samples_leaf
            or (params.max_depth is not None and depth >= params.max_depth)
        ):
            continue
        cand = rng.choice(X.shape[1], size=mtry, replace=False)
        best = _best_split(X, y, idx, cand, params.min_samples_leaf, rng)
        if best is None:
            continue
        f, thr, _ = best
        mask = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        l, r = new_node(), new_node()
        left[node], right[node] = l, r
        stack.append((l, idx[mask], depth + 1))
        stack.append((r, idx[~mask], depth + 1))
    return DecisionTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        counts=np.array(counts, dtype=np.int64),
    )


def train_rfc(X, y, params: ForestParams | None = None, seed: int = 0) -> RandomForestModel:
    """Bagged CART forest; per-tree RNG streams derive from the model seed."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be (n_samples, n_features) matching y")
    if X.shape[0] < 2 or len(np.unique(y)) < 2:
        raise SingleClassData("need samples from both classes")
    params = params or ForestParams()
    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        boot = rng.integers(0, X.shape[0], size=X.shape[0])
        trees.append(_grow_tree(X[boot], y[boot], params, rng))
    model = RandomForestModel(trees=trees, params=params, seed=seed,
                              n_features=X.shape[1])
    model.importances_ = _importances(model)
    return model


def rfc_score(model: RandomForestModel, x: np.ndarray) -> float:
    """Fraction of trees whose leaf majority votes positive."""
    votes = sum(tree.predict_one(np.asarray(x, dtype=float)) for tree in model.trees)
    return votes / len(model.trees)


def rfc_scores(model: RandomForestModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    votes = np.zeros(X.shape[0])
    for tree in model.trees:
        votes += tree.predict(X)
    return votes / len(model.trees)


def _importances(model: RandomForestModel) -> np.ndarray:
    """Mean decrease in Gini impurity per feature, normalized to sum 1."""
    acc = np.zeros(model.n_features)
    for tree in model.trees:
        n_root = tree.counts[0].sum()
        if n_root == 0:
            continue
        for node in range(len(tree.feature)):
            f = tree.feature[node]
            if f < 0:
                continue
            n = tree.counts[node].sum()
            nl = tree.counts[tree.left[node]].sum()
            nr = tree.counts[tree.right[node]].sum()
            decrease = n * _gini(tree.counts[node]) \
                - nl * _gini(tree.counts[tree.left[node]]) \
                - nr * _gini(tree.counts[tree.right[node]])
            acc[f] += decrease / n_root
    total = acc.sum()
    return acc / total if total > 0 else acc


def feature_importance(model: RandomForestModel) -> np.ndarray:
    if model.importances_ is None:
        model.importances_ = _importances(model)
    return model.importances_


def grouped_importance(model: RandomForestModel) -> dict[str, float]:
    """Importance totals over the four feature families."""
    imps = feature_importance(model)
    grouped: dict[str, float] = {}
    for slot in feature_layout():
        grouped[slot.family] = grouped.get(slot.family, 0.0) + float(imps[slot.index])
    return grouped


def save_forest(model: RandomForestModel, path) -> None:
    arrays = {
        "version": np.array(FOREST_FORMAT_VERSION),
        "seed": np.array(model.seed),
        "n_features": np.array(model.n_features),
        "params": np.array([
            model.params.n_trees,
            -1 if model.params.max_depth is None else model.params.max_depth,
            model.params.min_samples_leaf,
            -1 if model.params.features_per_split is None else model.params.features_per_split,
        ]),
    }
    for t, tree in enumerate(model.trees):
        arrays[f"t{t}_feature"] = tree.feature
        arrays[f"t{t}_threshold"] = tree.threshold
        arrays[f"t{t}_left"] = tree.left
        arrays[f"t{t}_right"] = tree.right
        arrays[f"t{t}_counts"] = tree.counts
    np.savez_compressed(path, **arrays)


def load_forest(path) -> RandomForestModel:
    data = np.load(path)
    version = int(data["version"])
    if version != FOREST_FORMAT_VERSION:
        raise ValueError(f"unsupported forest format version {version}")
    n_trees, max_depth, min_leaf, mtry = (int(v) for v in data["params"])
    params = ForestParams(
        n_trees=n_trees,
        max_depth=None if max_depth < 0 else max_depth,
        min_samples_leaf=min_leaf,
        features_per_split=None if mtry < 0 else mtry,
    )
    trees = [
        DecisionTree(
            feature=data[f"t{t}_feature"],
            threshold=data[f"t{t}_threshold"],
            left=data[f"t{t}_left"],
            right=data[f"t{t}_right"],
            counts=data[f"t{t}_counts"],
        )
        for t in range(n_trees)
    ]
    model = RandomForestModel(trees=trees, params=params, seed=int(data["seed"]),
                              n_features=int(data["n_features"]))
    model.importances_ = _importances(model)
    return model
