"""Shared contract for the six classifier families.

Every model answers a one-vs-rest binary question: does this record
belong to the target class ("correct") or not ("wrong")? Training
functions take numpy arrays (rows = scaled feature vectors, y in {0,1}
with 1 = correct) and return an immutable TrainedModel whose predict is
deterministic. predict_score exposes the kind's native real-valued
output (linear response, network output, log-density gap, leaf
probability, margin).
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class ModelError(ValueError):
    pass


class ArityMismatch(ModelError):
    pass


class WrongModelKind(ModelError):
    pass


class NonFiniteLoss(ModelError):
    def __init__(self, epoch: int, message: str = ""):
        super().__init__(message or f"training diverged at epoch {epoch}")
        self.epoch = epoch


class BinaryLabel(Enum):
    WRONG = 0
    CORRECT = 1


KINDS = ("linear", "mlp-bp", "mlp-bpcg", "pnn", "cart", "svm", "hybrid")

KIND_DISPLAY = {
    "linear": "Linear",
    "mlp-bp": "BP",
    "mlp-bpcg": "BP/CG",
    "pnn": "PNN",
    "cart": "CART",
    "svm": "SVM",
    "hybrid": "Hybrid",
}

_KIND_ALIASES = {
    "bp": "mlp-bp",
    "bpcg": "mlp-bpcg",
    "bp-cg": "mlp-bpcg",
    "bp/cg": "mlp-bpcg",
    "mlp": "mlp-bp",
    "lnn": "linear",
}


def canonical_kind(name: str) -> str:
    k = name.strip().lower()
    k = _KIND_ALIASES.get(k, k)
    if k not in KINDS:
        raise ModelError(f"unknown model kind {name!r}; known: {', '.join(KINDS)}")
    return k


class TrainedModel:
    """Base class: immutable after training, deterministic prediction."""

    kind: str = "?"

    def __init__(self, n_features: int, metadata: dict | None = None):
        self.n_features = n_features
        self.metadata = dict(metadata or {})

    def _check_arity(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise ArityMismatch(
                f"{self.kind} model expects {self.n_features} features, "
                f"got {X.shape[1]}"
            )
        return X

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def as_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ModelError("X must be a 2-D array")
    if y.shape != (X.shape[0],):
        raise ModelError("y must be one label per row of X")
    return X, y.astype(np.int64)


def require_both_labels(y: np.ndarray) -> None:
    if not ((y == 0).any() and (y == 1).any()):
        raise ModelError("training data must contain both labels")


def derive_seed(*parts) -> int:
    """Stable sub-seed derivation for per-(class, kind, role) training."""
    import zlib

    text = ":".join(str(p) for p in parts)
    return zlib.crc32(text.encode()) & 0x7FFFFFFF
