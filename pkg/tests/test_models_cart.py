import numpy as np
import pytest

from csrminer.models import leaf_id_of, train_cart, train_linear
from csrminer.models.base import WrongModelKind
from csrminer.models.cart import best_split, gini


def brute_force_best_split(X, y, min_leaf):
    """Independent oracle: try every (attribute, midpoint) pair, first
    strict improvement wins (lower attribute, then lower threshold)."""
    n = len(y)

    def g(labels):
        if labels.size == 0:
            return 0.0
        counts = np.bincount(labels, minlength=2).astype(float)
        p = counts / labels.size
        return 1.0 - float((p * p).sum())

    parent = g(y)
    best = None
    for a in range(X.shape[1]):
        vals = np.unique(X[:, a])
        for lo, hi in zip(vals, vals[1:]):
            t = 0.5 * (lo + hi)
            mask = X[:, a] <= t
            nl, nr = int(mask.sum()), int((~mask).sum())
            if nl < min_leaf or nr < min_leaf:
                continue
            gain = parent - (nl * g(y[mask]) + nr * g(y[~mask])) / n
            if best is None or gain > best[0]:
                best = (gain, a, t)
    return best


def collect_node_subsets(model, X):
    """(node, row indices) pairs for every internal node, by routing."""
    out = []

    def walk(node, idx):
        if node.is_leaf:
            return
        out.append((node, idx))
        mask = X[idx, node.attribute] <= node.threshold
        walk(node.left, idx[mask])
        walk(node.right, idx[~mask])

    walk(model.root, np.arange(X.shape[0]))
    return out


class TestGini:
    def test_even_split(self):
        assert gini(np.array([5.0, 5.0])) == pytest.approx(0.5)

    def test_pure(self):
        assert gini(np.array([7.0, 0.0])) == 0.0

    def test_empty(self):
        assert gini(np.array([0.0, 0.0])) == 0.0


class TestTreeStructure:
    def test_pure_input_single_leaf(self):
        X = np.random.default_rng(0).random((10, 3))
        model = train_cart(X, np.zeros(10, dtype=int))
        assert model.n_leaves == 1
        assert model.root.is_leaf
        assert model.root.leaf_id == 1
        assert model.depth() == 0

    def test_depth_one_routing(self):
        X = np.array([[0.1], [0.2], [0.3], [0.8], [0.9], [0.95]])
        y = np.array([0, 0, 0, 1, 1, 1])
        model = train_cart(X, y, min_leaf=1)
        assert model.n_leaves == 2
        assert leaf_id_of(model, np.array([0.0])) == 1
        assert leaf_id_of(model, np.array([1.0])) == 2
        t = model.root.threshold
        assert leaf_id_of(model, np.array([t])) == 1  # <= goes left

    def test_leaf_ids_consecutive_left_to_right(self):
        rng = np.random.default_rng(6)
        X = rng.random((300, 4))
        y = (X[:, 0] + X[:, 2] > 1.0).astype(int)
        model = train_cart(X, y, max_depth=6, min_leaf=5)
        ids = []

        def visit(node):
            if node.is_leaf:
                ids.append(node.leaf_id)
            else:
                visit(node.left)
                visit(node.right)

        visit(model.root)
        assert ids == list(range(1, model.n_leaves + 1))

    def test_every_record_reaches_one_leaf_with_min_occupancy(self):
        rng = np.random.default_rng(2)
        X = rng.random((400, 3))
        y = (X[:, 1] > 0.6).astype(int)
        min_leaf = 7
        model = train_cart(X, y, max_depth=10, min_leaf=min_leaf)
        ids = model.leaf_ids(X)
        assert ids.shape == (400,)
        counts = np.bincount(ids, minlength=model.n_leaves + 1)[1:]
        assert (counts >= min_leaf).all()
        assert counts.sum() == 400

    def test_max_depth_respected(self):
        rng = np.random.default_rng(8)
        X = rng.random((500, 5))
        y = (rng.random(500) < 0.5).astype(int)
        model = train_cart(X, y, max_depth=3, min_leaf=1)
        assert model.depth() <= 3

    def test_prediction_is_leaf_majority(self):
        rng = np.random.default_rng(4)
        X = rng.random((250, 3))
        y = ((X[:, 0] > 0.4) & (rng.random(250) < 0.9)).astype(int)
        model = train_cart(X, y, max_depth=4, min_leaf=10)
        ids = model.leaf_ids(X)
        preds = model.predict(X)
        for leaf in np.unique(ids):
            members = y[ids == leaf]
            majority = int(np.bincount(members, minlength=2).argmax())
            assert (preds[ids == leaf] == majority).all()

    def test_wrong_model_kind(self):
        model = train_linear(np.array([[0.1], [0.9]]), np.array([0, 1]))
        with pytest.raises(WrongModelKind):
            leaf_id_of(model, np.array([0.5]))


class TestSplitOracle:
    def test_root_split_matches_brute_force(self):
        rng = np.random.default_rng(99)
        for trial in range(40):
            n = int(rng.integers(20, 200))
            d = int(rng.integers(1, 5))
            X = rng.random((n, d))
            w = rng.normal(size=d)
            y = ((X @ w + 0.3 * rng.normal(size=n)) > np.median(X @ w)).astype(int)
            if y.min() == y.max():
                continue
            mine = best_split(X, y, 2, min_leaf=3)
            oracle = brute_force_best_split(X, y, min_leaf=3)
            assert (mine is None) == (oracle is None)
            if mine is not None:
                assert mine[1] == oracle[1]
                assert mine[2] == pytest.approx(oracle[2], abs=0)
                assert mine[0] == pytest.approx(oracle[0], rel=1e-9)

    def test_every_internal_node_is_exhaustively_optimal(self):
        rng = np.random.default_rng(55)
        X = rng.random((120, 3))
        y = ((X[:, 0] - X[:, 1]) > 0.1).astype(int)
        model = train_cart(X, y, max_depth=4, min_leaf=5)
        for node, idx in collect_node_subsets(model, X):
            oracle = brute_force_best_split(X[idx], y[idx], min_leaf=5)
            assert oracle is not None
            assert node.attribute == oracle[1]
            assert node.threshold == pytest.approx(oracle[2], abs=0)

    def test_duplicated_values_tie_break_low_attribute(self):
        # identical partitions across two attributes: the split must
        # report the lower attribute index
        X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
        y = np.array([0, 0, 1, 1])
        got = best_split(X, y, 2, min_leaf=1)
        assert got is not None and got[1] == 0

    def test_multiclass_mode(self):
        rng = np.random.default_rng(10)
        X = rng.random((90, 2))
        y = np.digitize(X[:, 0], [0.33, 0.66])
        model = train_cart(X, y, max_depth=6, min_leaf=2, n_classes=3)
        assert (model.predict(X) == y).mean() > 0.9
