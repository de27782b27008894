"""Hoeffding tree with the Hellinger split criterion and Gaussian numeric observers."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from awae.learners.base import Classifier

N_CANDIDATES = 10


def hellinger_gain(left: np.ndarray, right: np.ndarray) -> float:
    """Hellinger distance between the class distributions of two branches.

    ``left`` and ``right`` are per-class (possibly fractional) counts. The
    value lies in [0, 1]; an empty branch yields 0.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    nl, nr = left.sum(), right.sum()
    if nl <= 0.0 or nr <= 0.0:
        return 0.0
    diff = np.sqrt(left / nl) - np.sqrt(right / nr)
    return float(math.sqrt(float(np.dot(diff, diff))) / math.sqrt(2.0))


def hoeffding_bound(value_range: float, confidence: float, n: float) -> float:
    return math.sqrt(value_range**2 * math.log(1.0 / confidence) / (2.0 * n))


class Leaf:
    def __init__(self, n_classes: int, n_features: int, class_counts: np.ndarray | None = None):
        self.class_counts = np.zeros(n_classes) if class_counts is None else np.asarray(class_counts, float)
        # Welford accumulators per (class, feature)
        self.n = np.zeros(n_classes)
        self.mean = np.zeros((n_classes, n_features))
        self.m2 = np.zeros((n_classes, n_features))
        self.lo = np.full(n_features, np.inf)
        self.hi = np.full(n_features, -np.inf)
        self.seen = 0
        self.seen_at_last_attempt = 0

    def is_leaf(self) -> bool:
        return True

    def update(self, x: np.ndarray, c: int) -> None:
        self.class_counts[c] += 1.0
        self.n[c] += 1.0
        delta = x - self.mean[c]
        self.mean[c] += delta / self.n[c]
        self.m2[c] += delta * (x - self.mean[c])
        np.minimum(self.lo, x, out=self.lo)
        np.maximum(self.hi, x, out=self.hi)
        self.seen += 1

    def candidate_splits(self, feature: int) -> np.ndarray:
        lo, hi = self.lo[feature], self.hi[feature]
        if not hi > lo:
            return np.empty(0)
        return lo + (hi - lo) * np.arange(1, N_CANDIDATES + 1) / (N_CANDIDATES + 1)

    def class_split(self, feature: int, threshold: float) -> tuple[np.ndarray, np.ndarray]:
        """Estimated per-class counts at ``x[feature] <= threshold`` and above."""
        left = np.zeros_like(self.n)
        for c in np.flatnonzero(self.n):
            mu = self.mean[c, feature]
            var = self.m2[c, feature] / (self.n[c] - 1.0) if self.n[c] > 1 else 0.0
            if var <= 0.0:
                left[c] = self.n[c] if mu <= threshold else 0.0
            else:
                left[c] = self.n[c] * ndtr((threshold - mu) / math.sqrt(var))
        return left, self.n - left

    def best_split(self, feature: int) -> tuple[float, float, np.ndarray, np.ndarray]:
        best = (0.0, math.nan, None, None)
        for threshold in self.candidate_splits(feature):
            left, right = self.class_split(feature, threshold)
            gain = hellinger_gain(left, right)
            if gain > best[0]:
                best = (gain, float(threshold), left, right)
        return best


class Split:
    def __init__(self, feature: int, threshold: float, left, right):
        self.feature = int(feature)
        self.threshold = float(threshold)
        self.left = left
        self.right = right

    def is_leaf(self) -> bool:
        return False


class HoeffdingTree(Classifier):
    """Single-pass Hoeffding tree over numeric features.

    Split attempts happen at a leaf after every ``grace_period`` instances it
    receives. A split is made when the best feature's Hellinger gain beats the
    runner-up by more than the Hoeffding bound (range 1), or when the bound
    falls under ``tie_threshold``. Leaves predict their class frequencies with
    add-one smoothing.
    """

    kind = "hoeffding_tree"

    def __init__(
        self,
        n_classes: int,
        n_features: int,
        grace_period: int = 200,
        split_confidence: float = 1e-7,
        tie_threshold: float = 0.05,
    ):
        super().__init__(n_classes, n_features)
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.tie_threshold = tie_threshold
        self.root: Leaf | Split = Leaf(n_classes, n_features)

    def sort(self, x: np.ndarray) -> Leaf:
        node = self.root
        while not node.is_leaf():
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node

    def fit(self, X: np.ndarray, y: np.ndarray) -> "HoeffdingTree":
        X = self._check(X)
        for x, c in zip(X, y):
            leaf = self.sort(x)
            leaf.update(x, int(c))
            if leaf.seen - leaf.seen_at_last_attempt >= self.grace_period:
                leaf.seen_at_last_attempt = leaf.seen
                if np.count_nonzero(leaf.n) > 1:
                    self._attempt_split(leaf)
        return self

    def _attempt_split(self, leaf: Leaf) -> None:
        candidates = sorted(
            ((leaf.best_split(f), f) for f in range(self.n_features)),
            key=lambda item: item[0][0],
            reverse=True,
        )
        (gain, threshold, left, right), feature = candidates[0]
        if gain <= 0.0:
            return
        runner_up = candidates[1][0][0] if len(candidates) > 1 else 0.0
        eps = hoeffding_bound(1.0, self.split_confidence, leaf.seen)
        if gain - runner_up > eps or eps < self.tie_threshold:
            node = Split(
                feature,
                threshold,
                Leaf(self.n_classes, self.n_features, left),
                Leaf(self.n_classes, self.n_features, right),
            )
            self._replace(leaf, node)

    def _replace(self, old: Leaf, new: Split) -> None:
        if self.root is old:
            self.root = new
            return
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf():
                continue
            if node.left is old:
                node.left = new
                return
            if node.right is old:
                node.right = new
                return
            stack.extend((node.left, node.right))

    def leaves(self) -> list[Leaf]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf():
                out.append(node)
            else:
                stack.extend((node.right, node.left))
        return out

    def depth(self) -> int:
        def _depth(node):
            return 0 if node.is_leaf() else 1 + max(_depth(node.left), _depth(node.right))

        return _depth(self.root)

    def _support(self, X):
        out = np.empty((X.shape[0], self.n_classes))
        for i, x in enumerate(X):
            counts = self.sort(x).class_counts
            out[i] = (counts + 1.0) / (counts.sum() + self.n_classes)
        return out
