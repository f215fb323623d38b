"""Random-forest feature ranking for MFCC selection.

CART trees with Gini splits, grown on bootstrap samples with a random
feature subset tried at each node. Feature importance is the
sample-weighted impurity decrease, averaged over trees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabels, DimensionMismatch, InvalidConfig, InvalidK


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 8
    min_samples_leaf: int = 2
    features_per_split: int | None = None  # None -> ceil(sqrt(D))
    seed: int = 0

    def __post_init__(self):
        for name in ("n_trees", "max_depth", "min_samples_leaf"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be positive")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise InvalidConfig("features_per_split must be positive")


@dataclass
class Tree:
    # parallel node arrays; leaves have feature == -1
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    proba: list = field(default_factory=list)  # P(class = classes[1]) at the node
    importance: np.ndarray | None = None  # unnormalized, per feature

    def _add(self, proba):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.proba.append(proba)
        return len(self.feature) - 1

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.empty(len(X))
        for i, x in enumerate(X):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[i] = self.proba[node]
        return out


@dataclass
class Forest:
    trees: list[Tree]
    classes: np.ndarray
    n_features: int

    def predict_proba(self, X) -> np.ndarray:
        return np.mean([t.predict_proba(X) for t in self.trees], axis=0)

    def predict(self, X) -> np.ndarray:
        return np.where(self.predict_proba(X) > 0.5, self.classes[1], self.classes[0])

    def feature_importances(self) -> np.ndarray:
        """Mean-over-trees impurity decrease, normalized to sum to 1.

        Sums are exactly rounded (``math.fsum``) so the result does not depend
        on tree order.
        """
        n = len(self.trees)
        raw = np.array([
            math.fsum(t.importance[j] for t in self.trees) / n for j in range(self.n_features)
        ])
        total = math.fsum(raw)
        if total <= 0:
            return np.full(self.n_features, 1.0 / self.n_features)
        return raw / total


def gini(pos: np.ndarray | float, n: np.ndarray | float):
    p = pos / n
    return 2.0 * p * (1.0 - p)


def _best_split(x: np.ndarray, yb: np.ndarray, min_leaf: int):
    """Best threshold on one feature. Returns (decrease, threshold) or None.

    ``yb`` is the 0/1 class indicator. The decrease is the parent Gini minus
    the size-weighted child Gini.
    """
    n = len(x)
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], yb[order]
    n_left = np.arange(1, n)
    pos_left = np.cumsum(ys)[:-1]
    pos_total = ys.sum()
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not valid.any():
        return None
    n_right = n - n_left
    child = (n_left * gini(pos_left, n_left) + n_right * gini(pos_total - pos_left, n_right)) / n
    child = np.where(valid, child, np.inf)
    k = int(np.argmin(child))
    decrease = gini(pos_total, n) - child[k]
    return decrease, 0.5 * (xs[k] + xs[k + 1])


def grow_tree(X: np.ndarray, yb: np.ndarray, cfg: ForestConfig, rng: np.random.Generator) -> Tree:
    n_total, d = X.shape
    mtry = min(d, cfg.features_per_split or math.ceil(math.sqrt(d)))
    tree = Tree(importance=np.zeros(d))

    stack = [(np.arange(n_total), 0, None, None)]
    while stack:
        idx, depth, parent, side = stack.pop()
        pos = yb[idx].sum()
        node = tree._add(pos / len(idx))
        if parent is not None:
            (tree.left if side == 0 else tree.right)[parent] = node
        if depth >= cfg.max_depth or pos == 0 or pos == len(idx) or len(idx) < 2 * cfg.min_samples_leaf:
            continue
        best = None
        for j in rng.choice(d, size=mtry, replace=False):
            found = _best_split(X[idx, j], yb[idx], cfg.min_samples_leaf)
            if found is not None and (best is None or found[0] > best[0]):
                best = (found[0], found[1], int(j))
        if best is None or best[0] <= 0:
            continue
        decrease, thr, j = best
        tree.feature[node] = j
        tree.threshold[node] = thr
        tree.importance[j] += len(idx) / n_total * decrease
        go_left = X[idx, j] <= thr
        # right pushed first so the left subtree is numbered first
        stack.append((idx[~go_left], depth + 1, node, 1))
        stack.append((idx[go_left], depth + 1, node, 0))
    return tree


def train_random_forest(X, y, cfg: ForestConfig | None = None) -> Forest:
    """Bootstrap-aggregated CART trees; tree ``i`` uses RNG stream ``(seed, i)``."""
    cfg = cfg or ForestConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise DimensionMismatch("X must be (n, D) with one label per row")
    classes = np.unique(y)
    if len(classes) != 2:
        raise DegenerateLabels(f"need exactly two classes, found {len(classes)}")
    yb = (y == classes[1]).astype(float)
    trees = []
    for i in range(cfg.n_trees):
        rng = np.random.default_rng([cfg.seed, i])
        boot = rng.integers(0, len(X), size=len(X))
        trees.append(grow_tree(X[boot], yb[boot], cfg, rng))
    return Forest(trees, classes, X.shape[1])


@dataclass(frozen=True)
class FeatureSelector:
    selected_indices: tuple[int, ...]
    importances: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"indices": list(self.selected_indices), "importances": [float(v) for v in self.importances]}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSelector":
        return cls(tuple(int(i) for i in d["indices"]), tuple(float(v) for v in d["importances"]))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "FeatureSelector":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def select_features(forest: Forest, k: int) -> FeatureSelector:
    """Top-``k`` features by importance, ties going to the lower index."""
    d = forest.n_features
    if not 1 <= k <= d:
        raise InvalidK(f"k must be in [1, {d}], got {k}")
    imp = forest.feature_importances()
    ranked = sorted(range(d), key=lambda j: (-imp[j], j))
    return FeatureSelector(tuple(sorted(ranked[:k])), tuple(float(v) for v in imp))


def apply_selector(v, s: FeatureSelector) -> np.ndarray:
    """Gather the selected columns of a vector or a row matrix."""
    v = np.asarray(v, dtype=float)
    if not s.selected_indices:
        return v[..., :0]
    if v.shape[-1] <= max(s.selected_indices):
        raise DimensionMismatch(
            f"vector has {v.shape[-1]} features, selector needs index {max(s.selected_indices)}"
        )
    return v[..., list(s.selected_indices)]
