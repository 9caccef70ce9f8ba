"""Classification tree: greedy binary Gini splits, numbered leaves.

Candidate thresholds are midpoints between consecutive distinct sorted
values of each attribute; the chosen split maximizes the Gini impurity
decrease, with ties broken toward the lower attribute index and then
the lower threshold (determinism). Records with attribute <= threshold
go left. Growth stops at purity, max depth, or when no split can keep
min_leaf records in both children (or no split improves impurity).
Leaves are numbered 1..L left to right, and every record routes to
exactly one leaf; the leaf number doubles as the extra input of the
hybrid model.

The builder is label-count generic, so a native multiclass tree (labels
0..k-1) works through the same code path; the standard pipeline uses it
one-vs-rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from csrminer.models.base import (
    ModelError,
    TrainedModel,
    WrongModelKind,
    as_xy,
)

DEFAULT_MAX_DEPTH = 32
DEFAULT_MIN_LEAF = 5


@dataclass
class TreeNode:
    """Internal node (attribute/threshold/children) or leaf (id/counts)."""

    attribute: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    leaf_id: int = 0
    class_counts: tuple[int, ...] = ()
    prediction: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


def best_split(X: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int):
    """Exhaustive best (attribute, threshold) by Gini decrease.

    Returns (gain, attribute, threshold) or None when no valid split
    exists. Ties resolve to the lower attribute, then lower threshold.
    """
    n = y.size
    counts = np.bincount(y, minlength=n_classes).astype(float)
    parent = gini(counts)
    best = None
    for a in range(X.shape[1]):
        v = X[:, a]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        sy = y[order]
        # cumulative class counts after each prefix
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), sy] = 1.0
        cum = np.cumsum(onehot, axis=0)
        # split after position i is valid when the value strictly increases
        cut = np.flatnonzero(sv[:-1] < sv[1:])
        if cut.size == 0:
            continue
        nl = cut + 1
        nr = n - nl
        valid = (nl >= min_leaf) & (nr >= min_leaf)
        cut = cut[valid]
        if cut.size == 0:
            continue
        nl = nl[valid].astype(float)
        nr = nr[valid].astype(float)
        cl = cum[cut]
        cr = counts[None, :] - cl
        gl = 1.0 - np.sum((cl / nl[:, None]) ** 2, axis=1)
        gr = 1.0 - np.sum((cr / nr[:, None]) ** 2, axis=1)
        gain = parent - (nl * gl + nr * gr) / n
        i = int(np.argmax(gain))  # first max: lowest threshold wins ties
        if best is None or gain[i] > best[0]:
            thr = 0.5 * (sv[cut[i]] + sv[cut[i] + 1])
            best = (float(gain[i]), a, float(thr))
    return best


def _build(X, y, n_classes, depth, max_depth, min_leaf) -> TreeNode:
    counts = np.bincount(y, minlength=n_classes)
    node = TreeNode(
        class_counts=tuple(int(c) for c in counts),
        prediction=int(np.argmax(counts)),  # ties to the lower label
    )
    pure = (counts > 0).sum() <= 1
    if pure or depth >= max_depth or y.size < 2 * min_leaf:
        return node
    found = best_split(X, y, n_classes, min_leaf)
    if found is None or found[0] <= 0.0:
        return node
    _, a, thr = found
    mask = X[:, a] <= thr
    node.attribute = a
    node.threshold = thr
    node.left = _build(X[mask], y[mask], n_classes, depth + 1, max_depth, min_leaf)
    node.right = _build(X[~mask], y[~mask], n_classes, depth + 1, max_depth, min_leaf)
    return node


def _number_leaves(root: TreeNode) -> int:
    counter = 0

    def visit(node: TreeNode):
        nonlocal counter
        if node.is_leaf:
            counter += 1
            node.leaf_id = counter
        else:
            visit(node.left)
            visit(node.right)

    visit(root)
    return counter


class CartModel(TrainedModel):
    kind = "cart"

    def __init__(self, root: TreeNode, n_leaves: int, n_features: int, n_classes: int, metadata=None):
        super().__init__(n_features, metadata)
        self.root = root
        self.n_leaves = n_leaves
        self.n_classes = n_classes

    def _route(self, x: np.ndarray) -> TreeNode:
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.attribute] <= node.threshold else node.right
        return node

    def leaf_ids(self, X) -> np.ndarray:
        X = self._check_arity(X)
        return np.array([self._route(x).leaf_id for x in X], dtype=np.int64)

    def predict_score(self, X):
        """Fraction of correct-class training occupants at the leaf."""
        X = self._check_arity(X)
        out = np.empty(X.shape[0])
        for i, x in enumerate(X):
            leaf = self._route(x)
            total = sum(leaf.class_counts)
            out[i] = leaf.class_counts[1] / total if total else 0.0
        return out

    def predict(self, X):
        X = self._check_arity(X)
        return np.array([self._route(x).prediction for x in X], dtype=np.int64)

    def depth(self) -> int:
        def d(node):
            return 0 if node.is_leaf else 1 + max(d(node.left), d(node.right))

        return d(self.root)


def train_cart(
    X,
    y,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    impurity: str = "gini",
    n_classes: int | None = None,
    seed: int = 0,
) -> CartModel:
    """Grow the tree; deterministic, no pruning."""
    if max_depth < 1:
        raise ModelError("max_depth must be >= 1")
    if min_leaf < 1:
        raise ModelError("min_leaf must be >= 1")
    if impurity != "gini":
        raise ModelError(f"unsupported impurity {impurity!r}")
    X, y = as_xy(X, y)
    if n_classes is None:
        n_classes = max(2, int(y.max()) + 1)
    root = _build(X, y, n_classes, 0, max_depth, min_leaf)
    n_leaves = _number_leaves(root)
    meta = {"n_leaves": n_leaves, "max_depth": max_depth, "min_leaf": min_leaf}
    return CartModel(root, n_leaves, X.shape[1], n_classes, meta)


def leaf_id_of(model: TrainedModel, x) -> int:
    """Leaf number a record routes to; ids are 1..L left to right."""
    if not isinstance(model, CartModel):
        raise WrongModelKind(f"leaf_id_of needs a cart model, got {model.kind}")
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return int(model.leaf_ids(x.reshape(1, -1))[0])
    raise ModelError("leaf_id_of takes a single feature vector")
