"""Uniform training/prediction interface over the six model families.

make_spec builds a validated ClassifierSpec with the study's default
hyperparameters (113 hidden neurons, 100 epochs, Gini depth-32 trees,
degree-3 polynomial kernel); train dispatches it on (X, y) arrays with
y in {0,1}, 1 meaning membership in the target class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from csrminer.models.base import (
    ArityMismatch,
    BinaryLabel,
    KINDS,
    KIND_DISPLAY,
    ModelError,
    NonFiniteLoss,
    TrainedModel,
    WrongModelKind,
    canonical_kind,
    derive_seed,
)
from csrminer.models.cart import (
    CartModel,
    DEFAULT_MAX_DEPTH,
    DEFAULT_MIN_LEAF,
    leaf_id_of,
    train_cart,
)
from csrminer.models.hybrid import HybridModel, train_hybrid
from csrminer.models.linear import LinearModel, train_linear
from csrminer.models.mlp import (
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MOMENTUM,
    MLPModel,
    train_mlp,
)
from csrminer.models.pnn import DEFAULT_SIGMA, PNNModel, train_pnn
from csrminer.models.svm import (
    DEFAULT_C,
    DEFAULT_DEGREE,
    DEFAULT_TOLERANCE,
    SVMModel,
    train_svm,
)
from csrminer.models.persist import load_model, save_model

DEFAULT_PARAMS = {
    "linear": {"fit_bias": True},
    "mlp-bp": {
        "hidden_neurons": DEFAULT_HIDDEN,
        "epochs": DEFAULT_EPOCHS,
        "learning_rate": DEFAULT_LEARNING_RATE,
        "momentum": DEFAULT_MOMENTUM,
    },
    "mlp-bpcg": {
        "hidden_neurons": DEFAULT_HIDDEN,
        "epochs": DEFAULT_EPOCHS,
        "learning_rate": DEFAULT_LEARNING_RATE,
        "momentum": DEFAULT_MOMENTUM,
    },
    "pnn": {"sigma": DEFAULT_SIGMA},
    "cart": {"max_depth": DEFAULT_MAX_DEPTH, "min_leaf": DEFAULT_MIN_LEAF},
    "svm": {
        "kernel_degree": DEFAULT_DEGREE,
        "C": DEFAULT_C,
        "tolerance": DEFAULT_TOLERANCE,
    },
    "hybrid": {},  # nested cart/mlp blocks, see make_spec
}

_VALIDATORS = {
    "mlp-bp": lambda p: p["hidden_neurons"] >= 1 and p["epochs"] >= 1,
    "mlp-bpcg": lambda p: p["hidden_neurons"] >= 1 and p["epochs"] >= 1,
    "pnn": lambda p: p["sigma"] > 0,
    "cart": lambda p: p["max_depth"] >= 1 and p["min_leaf"] >= 1,
    "svm": lambda p: p["kernel_degree"] >= 1 and p["C"] > 0 and p["tolerance"] > 0,
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        check = _VALIDATORS.get(self.kind)
        if self.kind != "hybrid":
            unknown = set(self.params) - set(DEFAULT_PARAMS[self.kind])
            if self.kind == "svm":
                unknown -= {"max_iter"}
            if unknown:
                raise ModelError(f"unknown {self.kind} parameters: {sorted(unknown)}")
        if check is not None and not check({**DEFAULT_PARAMS[self.kind], **self.params}):
            raise ModelError(f"invalid hyperparameters for {self.kind}: {self.params}")

    @property
    def display(self) -> str:
        return KIND_DISPLAY[self.kind]


def make_spec(kind: str, seed: int = 0, **overrides) -> ClassifierSpec:
    """Spec with study defaults; keyword overrides replace individual
    hyperparameters (for hybrid use cart=dict(...), mlp=dict(...))."""
    kind = canonical_kind(kind)
    if kind == "hybrid":
        params = {
            "cart": {**DEFAULT_PARAMS["cart"], **overrides.pop("cart", {})},
            "mlp": {**DEFAULT_PARAMS["mlp-bp"], **overrides.pop("mlp", {})},
        }
        if overrides:
            raise ModelError(f"unknown hybrid parameters: {sorted(overrides)}")
        return ClassifierSpec(kind, params, seed)
    return ClassifierSpec(kind, {**DEFAULT_PARAMS[kind], **overrides}, seed)


def train(
    spec: ClassifierSpec,
    X: np.ndarray,
    y: np.ndarray,
    X_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
) -> TrainedModel:
    """Train one model of the spec's kind; validation data participates
    only for the kinds that use it (network weight selection)."""
    p = spec.params
    if spec.kind == "linear":
        return train_linear(X, y, seed=spec.seed, **p)
    if spec.kind == "mlp-bp":
        return train_mlp(X, y, X_val, y_val, seed=spec.seed, phase2=None, **p)
    if spec.kind == "mlp-bpcg":
        return train_mlp(X, y, X_val, y_val, seed=spec.seed, phase2="cg", **p)
    if spec.kind == "pnn":
        return train_pnn(X, y, seed=spec.seed, **p)
    if spec.kind == "cart":
        return train_cart(X, y, seed=spec.seed, **p)
    if spec.kind == "svm":
        return train_svm(X, y, seed=spec.seed, **p)
    if spec.kind == "hybrid":
        return train_hybrid(
            X,
            y,
            X_val,
            y_val,
            cart_params=p.get("cart"),
            mlp_params=p.get("mlp"),
            seed=spec.seed,
        )
    raise ModelError(f"unhandled kind {spec.kind}")


def predict(model: TrainedModel, x) -> BinaryLabel:
    """Single-record uniform prediction."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ModelError("predict takes one feature vector; use predict_many")
    return BinaryLabel(int(model.predict(x.reshape(1, -1))[0]))


def predict_score(model: TrainedModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ModelError("predict_score takes one feature vector")
    return float(model.predict_score(x.reshape(1, -1))[0])


def predict_many(model: TrainedModel, X) -> np.ndarray:
    return model.predict(X)


__all__ = [
    "ArityMismatch",
    "BinaryLabel",
    "CartModel",
    "ClassifierSpec",
    "HybridModel",
    "KINDS",
    "KIND_DISPLAY",
    "LinearModel",
    "MLPModel",
    "ModelError",
    "NonFiniteLoss",
    "PNNModel",
    "SVMModel",
    "TrainedModel",
    "WrongModelKind",
    "canonical_kind",
    "derive_seed",
    "leaf_id_of",
    "load_model",
    "make_spec",
    "predict",
    "predict_many",
    "predict_score",
    "save_model",
    "train",
    "train_cart",
    "train_hybrid",
    "train_linear",
    "train_mlp",
    "train_pnn",
    "train_svm",
]
