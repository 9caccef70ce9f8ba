"""Model save/load: versioned, self-describing JSON.

Every file carries the format version, the kind tag, the parameters the
kind needs to rebuild itself, optional metadata, and the fingerprint of
the scaling parameters the training features came from, so a CLI run can
be resumed and a model can refuse mismatched inputs upstream.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from csrminer.models.base import ModelError, TrainedModel
from csrminer.models.cart import CartModel, TreeNode
from csrminer.models.hybrid import HybridModel
from csrminer.models.linear import LinearModel
from csrminer.models.mlp import MLPModel
from csrminer.models.pnn import PNNModel
from csrminer.models.svm import SVMModel

FORMAT_VERSION = 1


def _tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {
            "leaf_id": node.leaf_id,
            "class_counts": list(node.class_counts),
            "prediction": node.prediction,
        }
    return {
        "attribute": node.attribute,
        "threshold": node.threshold,
        "left": _tree_to_dict(node.left),
        "right": _tree_to_dict(node.right),
    }


def _tree_from_dict(d: dict) -> TreeNode:
    if "leaf_id" in d:
        return TreeNode(
            leaf_id=d["leaf_id"],
            class_counts=tuple(d["class_counts"]),
            prediction=d["prediction"],
        )
    return TreeNode(
        attribute=d["attribute"],
        threshold=d["threshold"],
        left=_tree_from_dict(d["left"]),
        right=_tree_from_dict(d["right"]),
    )


def _payload(model: TrainedModel) -> dict:
    if isinstance(model, LinearModel):
        return {
            "weights": model.weights.tolist(),
            "fit_bias": model.fit_bias,
            "n_features": model.n_features,
        }
    if isinstance(model, MLPModel):
        return {"W1": model.W1.tolist(), "W2": model.W2.tolist()}
    if isinstance(model, PNNModel):
        return {
            "X_train": model.X_train.tolist(),
            "y_train": model.y_train.tolist(),
            "sigma": model.sigma,
        }
    if isinstance(model, SVMModel):
        return {
            "X_sv": model.X_sv.tolist(),
            "y_sv": model.y_sv.tolist(),
            "alpha_sv": model.alpha_sv.tolist(),
            "b": model.b,
            "degree": model.degree,
            "n_features": model.n_features,
        }
    if isinstance(model, CartModel):
        return {
            "tree": _tree_to_dict(model.root),
            "n_leaves": model.n_leaves,
            "n_features": model.n_features,
            "n_classes": model.n_classes,
        }
    if isinstance(model, HybridModel):
        return {
            "tree": _payload(model.tree),
            "net": _payload(model.net),
            "net_kind": model.net.kind,
        }
    raise ModelError(f"cannot serialize model of type {type(model).__name__}")


def save_model(model: TrainedModel, path, scaling_fingerprint: str | None = None) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "scaling_fingerprint": scaling_fingerprint,
        "metadata": _jsonable(model.metadata),
        "payload": _payload(model),
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def _rebuild(kind: str, payload: dict, metadata: dict) -> TrainedModel:
    if kind == "linear":
        return LinearModel(
            np.array(payload["weights"]),
            payload["fit_bias"],
            payload["n_features"],
            metadata,
        )
    if kind in ("mlp-bp", "mlp-bpcg"):
        m = MLPModel(np.array(payload["W1"]), np.array(payload["W2"]), kind, metadata)
        return m
    if kind == "pnn":
        return PNNModel(
            np.array(payload["X_train"]),
            np.array(payload["y_train"], dtype=np.int64),
            payload["sigma"],
            metadata,
        )
    if kind == "svm":
        return SVMModel(
            np.array(payload["X_sv"]).reshape(-1, payload["n_features"]),
            np.array(payload["y_sv"]),
            np.array(payload["alpha_sv"]),
            payload["b"],
            payload["degree"],
            payload["n_features"],
            metadata,
        )
    if kind == "cart":
        root = _tree_from_dict(payload["tree"])
        return CartModel(
            root, payload["n_leaves"], payload["n_features"], payload["n_classes"], metadata
        )
    if kind == "hybrid":
        tree = _rebuild("cart", payload["tree"], {})
        net = _rebuild(payload["net_kind"], payload["net"], {})
        return HybridModel(tree, net, metadata)
    raise ModelError(f"unknown model kind {kind!r} in file")


def load_model(path) -> TrainedModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelError(f"unsupported model format version {version!r}")
    model = _rebuild(doc["kind"], doc["payload"], doc.get("metadata") or {})
    model.metadata["scaling_fingerprint"] = doc.get("scaling_fingerprint")
    return model
