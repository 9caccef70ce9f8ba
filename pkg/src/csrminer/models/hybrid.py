"""Decision tree feeding a neural network.

A CART model is trained first; each record's leaf number, min-max scaled
over the tree's 1..L id range ((id - 1)/(L - 1), or a constant 0.5 when
the tree is a single leaf), becomes an extra input, and the perceptron
trains on the widened data with the same parameters it would use alone.
Prediction routes a record through the stored tree to get the extra
input, then through the network.
"""

from __future__ import annotations

import numpy as np

from csrminer.models.base import TrainedModel
from csrminer.models.cart import CartModel, train_cart
from csrminer.models.mlp import MLPModel, train_mlp


def scale_leaf_ids(leaf_ids: np.ndarray, n_leaves: int) -> np.ndarray:
    if n_leaves <= 1:
        return np.full(leaf_ids.shape, 0.5)
    return (leaf_ids - 1.0) / (n_leaves - 1.0)


class HybridModel(TrainedModel):
    kind = "hybrid"

    def __init__(self, tree: CartModel, net: MLPModel, metadata=None):
        super().__init__(tree.n_features, metadata)
        self.tree = tree
        self.net = net

    def _augment(self, X: np.ndarray) -> np.ndarray:
        leaf = scale_leaf_ids(self.tree.leaf_ids(X), self.tree.n_leaves)
        return np.hstack([X, leaf[:, None]])

    def predict_score(self, X):
        X = self._check_arity(X)
        return self.net.predict_score(self._augment(X))

    def predict(self, X):
        X = self._check_arity(X)
        return self.net.predict(self._augment(X))


def train_hybrid(
    X,
    y,
    X_val=None,
    y_val=None,
    cart_params: dict | None = None,
    mlp_params: dict | None = None,
    seed: int = 0,
) -> HybridModel:
    tree = train_cart(X, y, seed=seed, **(cart_params or {}))
    aug = np.hstack(
        [X, scale_leaf_ids(tree.leaf_ids(X), tree.n_leaves)[:, None]]
    )
    aug_val = None
    if X_val is not None and len(X_val) > 0:
        aug_val = np.hstack(
            [X_val, scale_leaf_ids(tree.leaf_ids(X_val), tree.n_leaves)[:, None]]
        )
    net = train_mlp(aug, y, aug_val, y_val, seed=seed, **(mlp_params or {}))
    meta = {"n_leaves": tree.n_leaves, **{f"net_{k}": v for k, v in net.metadata.items()}}
    return HybridModel(tree, net, meta)
