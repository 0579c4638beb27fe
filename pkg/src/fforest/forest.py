"""Base learners: CART trees, completely random trees, and 100-tree forests.

Split quality follows the two-class Gini form Gini(D) = 2p(1-p) with the
size-weighted child sum; best_split enumerates midpoints of consecutive
distinct sorted values per candidate feature and breaks ties toward the
lower feature index, then the lower threshold. k-fold out-of-fold class
vectors (the "augmented features" consumed by cascade layers) also live
here, since they are a property of how forests are trained.
"""

import math

import numpy as np

from . import _kernels, probcheck
from .errors import (
    DimensionMismatchError,
    EmptySetError,
    NonFiniteError,
    SingleClassError,
    TooFewSamplesError,
)
from .util import run_indexed, spawn_seeds

KINDS = ("random", "completely_random")


def gini(labels):
    """Gini impurity 2p(1-p) where p is the fraction of label-1 samples."""
    arr = np.asarray(labels)
    n = arr.size
    if n == 0:
        raise EmptySetError("gini of an empty label set")
    p = float(arr.sum()) / n
    return 2.0 * p * (1.0 - p)


def weighted_gini(X, y, feature_index, threshold):
    """Size-weighted Gini of the partition x[feature] <= threshold.

    A split that leaves one side empty is a no-op and scores as the parent
    impurity.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = y.size
    if n == 0:
        raise EmptySetError("weighted_gini of an empty sample set")
    mask = X[:, feature_index] <= threshold
    n1 = int(mask.sum())
    n2 = n - n1
    if n1 == 0 or n2 == 0:
        return gini(y)
    p1 = float(y[mask].sum()) / n1
    p2 = float(y[~mask].sum()) / n2
    return (n1 / n) * (2.0 * p1 * (1.0 - p1)) + (n2 / n) * (2.0 * p2 * (1.0 - p2))


def best_split(X, y, candidate_features=None):
    """Minimizing (feature, threshold) over candidates, or None.

    Thresholds are midpoints of consecutive distinct sorted values of each
    candidate feature. Ties resolve to the lower feature index and then
    the lower threshold. Returns None when no candidate partitions the
    set (all candidates constant).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        raise EmptySetError("best_split of an empty sample set")
    d = X.shape[1]
    if candidate_features is None:
        features = np.arange(d, dtype=np.int64)
    else:
        features = np.unique(np.asarray(candidate_features, dtype=np.int64))
    xt = np.ascontiguousarray(X.T)
    idx = np.arange(y.size, dtype=np.int64)
    f, t, _, found = _kernels.best_split_scan(xt, y, features, idx)
    if not found:
        return None
    return int(f), float(t)


class Tree:
    """A fitted tree in flat-array form. feature -1 marks a leaf."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    def predict_proba(self, X):
        X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        out = np.zeros((X.shape[0], 2))
        _kernels.accumulate_tree(X, self.feature, self.threshold, self.left, self.right, self.value, out)
        return out

    def to_record(self):
        """Nested split/leaf records; children carry higher ids, so a
        reverse sweep builds bottom-up without recursion."""
        n = self.n_nodes
        records = [None] * n
        for i in range(n - 1, -1, -1):
            if self.feature[i] < 0:
                records[i] = {"type": "leaf", "value": [float(self.value[i, 0]), float(self.value[i, 1])]}
            else:
                records[i] = {
                    "type": "split",
                    "feature_index": int(self.feature[i]),
                    "threshold": float(self.threshold[i]),
                    "left": records[self.left[i]],
                    "right": records[self.right[i]],
                }
        return records[0]

    @classmethod
    def from_record(cls, record):
        feature, threshold, left, right, value = [], [], [], [], []
        # preorder walk with an explicit stack; slot holds the node's id
        stack = [(record, None, None)]
        while stack:
            node, parent, side = stack.pop()
            nid = len(feature)
            if parent is not None:
                (left if side == "left" else right)[parent] = nid
            if node["type"] == "leaf":
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append([node["value"][0], node["value"][1]])
            else:
                feature.append(node["feature_index"])
                threshold.append(node["threshold"])
                left.append(-1)
                right.append(-1)
                value.append([0.0, 0.0])
                stack.append((node["right"], nid, "right"))
                stack.append((node["left"], nid, "left"))
        return cls(
            np.asarray(feature, dtype=np.int64),
            np.asarray(threshold, dtype=np.float64),
            np.asarray(left, dtype=np.int64),
            np.asarray(right, dtype=np.int64),
            np.asarray(value, dtype=np.float64),
        )


def _validate_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatchError(f"X {X.shape} does not match {y.size} labels")
    if y.size == 0:
        raise EmptySetError("no samples")
    if not np.isfinite(X).all():
        raise NonFiniteError("non-finite feature values")
    return X, y.astype(np.int64)


def build_tree(X, y, kind, rng):
    """Grow one tree of the given kind. rng: Generator or seed."""
    X, y = _validate_xy(X, y)
    xt = np.ascontiguousarray(X.T)
    return _build_tree_xt(xt, y, kind, rng)


def _build_tree_xt(xt, y, kind, rng):
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if kind == "random":
        d = xt.shape[0]
        mf = min(int(math.ceil(math.sqrt(d))), d)
        arrays = _kernels.build_cart(xt, y, mf, rng)
    elif kind == "completely_random":
        arrays = _kernels.build_crt(xt, y, rng)
    else:
        raise ValueError(f"unknown tree kind {kind!r}")
    return Tree(*arrays)


class Forest:
    """A bag of trees of one kind, no bootstrap; randomness lives in the
    per-node feature (and for completely random trees, threshold) draws."""

    def __init__(self, kind, n_trees=100, seed=0):
        if kind not in KINDS:
            raise ValueError(f"unknown forest kind {kind!r}")
        self.kind = kind
        self.n_trees = n_trees
        self.seed = seed
        self.trees = []
        self.d = None

    def fit(self, X, y):
        X, y = _validate_xy(X, y)
        classes = np.unique(y)
        if classes.size < 2:
            raise SingleClassError("both labels are required to fit a forest")
        xt = np.ascontiguousarray(X.T)
        self._fit_xt(xt, y, spawn_seeds(self.seed, self.n_trees))
        return self

    def _fit_xt(self, xt, y, tree_seeds):
        self.d = xt.shape[0]
        rngs = [np.random.default_rng(s) for s in tree_seeds]
        self.trees = run_indexed(lambda i: _build_tree_xt(xt, y, self.kind, rngs[i]), self.n_trees)

    def predict_proba(self, X):
        X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        if self.d is not None and X.shape[1] != self.d:
            raise DimensionMismatchError(f"expected {self.d} features, got {X.shape[1]}")
        out = np.zeros((X.shape[0], 2))
        for tree in self.trees:
            _kernels.accumulate_tree(X, tree.feature, tree.threshold, tree.left, tree.right, tree.value, out)
        out /= len(self.trees)
        return probcheck.check_batch(out)


def forest_fit(X, y, kind, n_trees=100, seed=0):
    return Forest(kind, n_trees=n_trees, seed=seed).fit(X, y)


def forest_predict(forest, X):
    single = np.asarray(X).ndim == 1
    probs = forest.predict_proba(np.atleast_2d(X))
    return probs[0] if single else probs


def stratified_folds(y, k, rng):
    """Per-class shuffled assignment of samples to k folds.

    Returns an (n,) array of fold ids. Every class must have at least k
    members so each fold sees both labels.
    """
    y = np.asarray(y)
    fold_of = np.empty(y.size, dtype=np.int64)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < k:
            raise TooFewSamplesError(f"class {cls} has {idx.size} samples, needs at least {k}")
        idx = rng.permutation(idx)
        for f, chunk in enumerate(np.array_split(idx, k)):
            fold_of[chunk] = f
    return fold_of


def kfold_augmented(X, y, kinds, k=3, seed=0, n_trees=100):
    """Train one forest per entry of kinds with shared k-fold splits.

    Returns (forests, oof) where forests are refit on all samples for
    inference, and oof is the (n, 2*len(kinds)) matrix of out-of-fold
    class vectors: sample i's prediction from the fold model that never
    saw it, concatenated across forests.
    """
    X, y = _validate_xy(X, y)
    if np.unique(y).size < 2:
        raise SingleClassError("both labels are required")
    if k < 2:
        raise TooFewSamplesError("k must be at least 2")
    root = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    children = root.spawn(1 + len(kinds) * (k + 1))
    fold_of = stratified_folds(y, k, np.random.default_rng(children[0]))
    # seeds laid out forest-major: forest i uses children[1 + i*(k+1) ...]
    n = y.size
    oof = np.zeros((n, 2 * len(kinds)))
    xt_full = np.ascontiguousarray(X.T)
    for f in range(k):
        held = fold_of == f
        train = ~held
        xt_sub = np.ascontiguousarray(X[train].T)
        y_sub = y[train]
        X_held = np.ascontiguousarray(X[held])
        for i, kind in enumerate(kinds):
            fold_seed = children[1 + i * (k + 1) + f]
            model = Forest(kind, n_trees=n_trees, seed=None)
            model._fit_xt(xt_sub, y_sub, spawn_seeds(fold_seed, n_trees))
            oof[held, 2 * i:2 * i + 2] = model.predict_proba(X_held)
    forests = []
    for i, kind in enumerate(kinds):
        refit_seed = children[1 + i * (k + 1) + k]
        model = Forest(kind, n_trees=n_trees, seed=None)
        model._fit_xt(xt_full, y, spawn_seeds(refit_seed, n_trees))
        forests.append(model)
    probcheck.check_batch(oof)
    return forests, oof
