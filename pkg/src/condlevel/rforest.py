"""Random forest classifier built from scratch on CART trees.

Used to judge which game a generated segment most resembles. Trees are
grown on bootstrap samples with Gini impurity, sqrt(F) random feature
candidates per split, no depth limit, and a minimum leaf size of 2;
prediction is a majority vote (ties break to the lowest class index, so
the vote is invariant to tree order).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewSamplesError


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    class_counts: np.ndarray | None = None  # set on leaves

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini_best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray,
                     n_classes: int, min_leaf: int):
    """Best (feature, threshold, gini) over the candidate features.

    For each feature, sorts the node's rows once and evaluates every
    boundary between distinct values using prefix class counts.
    """
    n = y.shape[0]
    best = (None, 0.0, np.inf)
    for f in features:
        vals = X[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[order]
        # prefix[i, k] = count of class k among the first i rows
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), sy] = 1.0
        prefix = np.cumsum(onehot, axis=0)
        total = prefix[-1]
        # candidate split after row i (left = rows 0..i)
        idx = np.arange(min_leaf - 1, n - min_leaf)
        if idx.size == 0:
            continue
        boundary = idx[sv[idx] < sv[idx + 1]]
        if boundary.size == 0:
            continue
        n_left = (boundary + 1).astype(np.float64)
        n_right = n - n_left
        left_counts = prefix[boundary]
        right_counts = total[None, :] - left_counts
        gini_left = 1.0 - ((left_counts / n_left[:, None]) ** 2).sum(axis=1)
        gini_right = 1.0 - ((right_counts / n_right[:, None]) ** 2).sum(axis=1)
        weighted = (n_left * gini_left + n_right * gini_right) / n
        j = int(np.argmin(weighted))
        if weighted[j] < best[2]:
            thr = 0.5 * (sv[boundary[j]] + sv[boundary[j] + 1])
            best = (int(f), float(thr), float(weighted[j]))
    return best


class DecisionTree:
    """CART classifier; no depth limit, leaves hold class counts."""

    def __init__(self, n_classes: int, max_features: int, min_leaf: int = 2):
        self.n_classes = n_classes
        self.max_features = max_features
        self.min_leaf = min_leaf
        self.root: _Node | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "DecisionTree":
        self.root = self._grow(X, y, rng)
        return self

    def _grow(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> _Node:
        counts = np.bincount(y, minlength=self.n_classes)
        if y.size < 2 * self.min_leaf or counts.max() == y.size:
            return _Node(class_counts=counts)
        features = rng.choice(X.shape[1], size=self.max_features, replace=False)
        feature, threshold, gini = _gini_best_split(
            X, y, features, self.n_classes, self.min_leaf
        )
        if feature is None:
            return _Node(class_counts=counts)
        mask = X[:, feature] <= threshold
        if mask.sum() < self.min_leaf or (~mask).sum() < self.min_leaf:
            return _Node(class_counts=counts)
        node = _Node(feature=feature, threshold=threshold)
        node.left = self._grow(X[mask], y[mask], rng)
        node.right = self._grow(X[~mask], y[~mask], rng)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = int(np.argmax(node.class_counts))
        return out


class RandomForest:
    """Bootstrap-aggregated CART trees with majority voting."""

    def __init__(self, n_trees: int = 100, min_leaf: int = 2, seed: int = 0):
        self.n_trees = n_trees
        self.min_leaf = min_leaf
        self.seed = seed
        self.trees: list[DecisionTree] = []
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.shape[0] < 2 * self.min_leaf:
            raise TooFewSamplesError(f"need at least {2 * self.min_leaf} samples")
        self.n_classes = int(y.max()) + 1
        max_features = max(1, int(np.sqrt(X.shape[1])))
        rng = np.random.default_rng(self.seed)
        self.trees = []
        n = X.shape[0]
        for _ in range(self.n_trees):
            boot = rng.integers(0, n, size=n)
            tree = DecisionTree(self.n_classes, max_features, self.min_leaf)
            tree.fit(X[boot], y[boot], rng)
            self.trees.append(tree)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        for tree in self.trees:
            pred = tree.predict(X)
            votes[np.arange(X.shape[0]), pred] += 1
        return np.argmax(votes, axis=1)

    def accuracy(self, X: np.ndarray, y: np.ndarray) -> float:
        return float((self.predict(X) == np.asarray(y)).mean())
