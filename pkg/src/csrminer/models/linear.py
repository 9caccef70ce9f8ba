"""Linear network trained by SVD pseudo-inverse least squares.

The two-layer linear baseline: a design matrix (features plus a bias
column) is fit to 0/1 targets in the least-squares sense through the
singular value decomposition, truncating singular values below the
conventional eps * max(m, n) * s_max cutoff. Prediction thresholds the
linear response at 0.5.
"""

from __future__ import annotations

import numpy as np

from csrminer.models.base import TrainedModel, as_xy, require_both_labels


class LinearModel(TrainedModel):
    kind = "linear"

    def __init__(self, weights: np.ndarray, fit_bias: bool, n_features: int, metadata=None):
        super().__init__(n_features, metadata)
        self.weights = np.asarray(weights, dtype=float)
        self.fit_bias = fit_bias

    def _design(self, X: np.ndarray) -> np.ndarray:
        if self.fit_bias:
            return np.hstack([X, np.ones((X.shape[0], 1))])
        return X

    def predict_score(self, X):
        X = self._check_arity(X)
        return self._design(X) @ self.weights

    def predict(self, X):
        return (self.predict_score(X) >= 0.5).astype(np.int64)


def pinv_solve(A: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-norm least-squares solution via truncated SVD.

    Returns (weights, rank).
    """
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1]), 0
    cutoff = np.finfo(float).eps * max(A.shape) * s[0]
    keep = s > cutoff
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    w = Vt.T @ (inv_s * (U.T @ t))
    return w, int(keep.sum())


def train_linear(X, y, seed: int = 0, fit_bias: bool = True) -> LinearModel:
    """Least-squares fit of 0/1 targets; degenerate designs still solve
    (minimum-norm solution) and are flagged in metadata."""
    X, y = as_xy(X, y)
    require_both_labels(y)
    A = np.hstack([X, np.ones((X.shape[0], 1))]) if fit_bias else X
    w, rank = pinv_solve(A, y.astype(float))
    resid = A @ w - y
    meta = {
        "rank": rank,
        "degenerate_design": rank < A.shape[1],
        "training_sse": float(resid @ resid),
    }
    return LinearModel(w, fit_bias, X.shape[1], meta)
