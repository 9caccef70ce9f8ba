"""Probabilistic neural network: the training set is the hidden layer.

Every training case becomes one pattern unit; a query is scored per
class by a Gaussian Parzen sum over that class's cases, normalized by
class size, and the larger class-conditional density wins. Sums are
evaluated in log space (log-sum-exp), which keeps the tiny-bandwidth
regime exact: as sigma -> 0 the classifier degenerates to one nearest
neighbor instead of underflowing to a tie.
"""

from __future__ import annotations

import numpy as np

from csrminer.models.base import ModelError, TrainedModel, as_xy, require_both_labels

DEFAULT_SIGMA = 0.1
_CHUNK = 512


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    out = m.squeeze(axis) + np.log(np.sum(np.exp(a - m), axis=axis))
    return out


class PNNModel(TrainedModel):
    kind = "pnn"

    def __init__(self, X_train, y_train, sigma, metadata=None):
        super().__init__(X_train.shape[1], metadata)
        self.X_train = X_train
        self.y_train = y_train
        self.sigma = float(sigma)
        self._idx0 = np.flatnonzero(y_train == 0)
        self._idx1 = np.flatnonzero(y_train == 1)

    def _log_class_scores(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = self._check_arity(X)
        inv = -1.0 / (2.0 * self.sigma * self.sigma)
        s0 = np.empty(X.shape[0])
        s1 = np.empty(X.shape[0])
        for at in range(0, X.shape[0], _CHUNK):
            chunk = X[at : at + _CHUNK]
            # squared distances to every training case
            d2 = (
                np.sum(chunk * chunk, axis=1)[:, None]
                + np.sum(self.X_train * self.X_train, axis=1)[None, :]
                - 2.0 * chunk @ self.X_train.T
            )
            np.maximum(d2, 0.0, out=d2)
            logk = inv * d2
            s0[at : at + _CHUNK] = _logsumexp(logk[:, self._idx0], axis=1) - np.log(
                self._idx0.size
            )
            s1[at : at + _CHUNK] = _logsumexp(logk[:, self._idx1], axis=1) - np.log(
                self._idx1.size
            )
        return s0, s1

    def predict_score(self, X):
        """Log-density gap: positive favors the correct class."""
        s0, s1 = self._log_class_scores(X)
        return s1 - s0

    def predict(self, X):
        return (self.predict_score(X) > 0.0).astype(np.int64)


def train_pnn(X, y, sigma: float = DEFAULT_SIGMA, seed: int = 0) -> PNNModel:
    """Store the training cases; hidden layer size equals len(X)."""
    X, y = as_xy(X, y)
    require_both_labels(y)
    if sigma <= 0:
        raise ModelError("sigma must be positive")
    meta = {"hidden_neurons": X.shape[0], "sigma": float(sigma)}
    return PNNModel(X.copy(), y.copy(), sigma, meta)
