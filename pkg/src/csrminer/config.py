"""Run configuration: one JSON file governs every knob and seed.

Precedence is defaults < config file < command-line flags. Defaults are
the study's values where the study states one (113 hidden neurons, 100
epochs for both training phases, Gini trees of height 32 with min leaf
5, degree-3 polynomial kernel with C=1, 50/25/25 split, 10 folds) and
this package's documented choices otherwise. The fully resolved config
hashes canonically (sorted-key JSON, sha256) into the run manifest, and
a manifest can be fed back as --config to reproduce a run.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from csrminer.models import ClassifierSpec, make_spec
from csrminer.models.base import canonical_kind
from csrminer.scoring import EvaluationKind

ENV_CONFIG = "CSRMINER_CONFIG"

DEFAULT_MODELS = ["linear", "mlp-bp", "mlp-bpcg", "pnn", "cart", "hybrid", "svm"]
DEFAULT_SENSITIVITY_MODELS = ["linear", "mlp-bp", "mlp-bpcg", "hybrid"]


class ConfigError(ValueError):
    pass


def default_config() -> dict:
    return {
        "seed": 1,
        "target": "customer-service",
        "split_met": None,  # None: met split for customer service only
        "min_class_size": 50,
        "ratios": [0.5, 0.25, 0.25],
        "kfold": 10,
        "scaling_mode": "train",
        "models": list(DEFAULT_MODELS),
        "sensitivity": {
            "enabled": True,
            "models": list(DEFAULT_SENSITIVITY_MODELS),
        },
        "model_params": {
            "mlp": {
                "hidden_neurons": 113,
                "epochs": 100,
                "learning_rate": 0.1,
                "momentum": 0.9,
            },
            "pnn": {"sigma": 0.1},
            "cart": {"max_depth": 32, "min_leaf": 5},
            "svm": {"kernel_degree": 3, "C": 1.0, "tolerance": 1e-3},
        },
        "synth": {},
    }


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> dict:
    """Resolve the effective config: defaults, then the file (explicit
    path or the CSRMINER_CONFIG fallback), then explicit overrides.
    A run manifest is accepted in place of a config file."""
    cfg = default_config()
    path = path or os.environ.get(ENV_CONFIG)
    if path:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if "config" in doc and "config_hash" in doc:
            doc = doc["config"]  # a manifest round-trips as a config
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        cfg = _deep_merge(cfg, doc)
    if overrides:
        cfg = _deep_merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    return validate_config(cfg)


def validate_config(cfg: dict) -> dict:
    try:
        target = EvaluationKind(cfg["target"])
    except ValueError:
        raise ConfigError(f"unknown target {cfg.get('target')!r}") from None
    if cfg["split_met"] is None:
        cfg["split_met"] = target is EvaluationKind.CUSTOMER_SERVICE
    cfg["models"] = [canonical_kind(m) for m in _as_list(cfg["models"])]
    sens = cfg["sensitivity"]
    sens["models"] = [canonical_kind(m) for m in _as_list(sens["models"])]
    if not cfg["models"]:
        raise ConfigError("models list is empty")
    ratios = cfg["ratios"]
    if len(ratios) != 3:
        raise ConfigError("ratios must have three entries")
    if int(cfg["kfold"]) < 2:
        raise ConfigError("kfold must be >= 2")
    if cfg["scaling_mode"] not in ("train", "all"):
        raise ConfigError("scaling_mode must be 'train' or 'all'")
    if int(cfg["min_class_size"]) < 1:
        raise ConfigError("min_class_size must be >= 1")
    return cfg


def _as_list(value) -> list:
    if isinstance(value, str):
        return [v for v in value.replace(",", " ").split() if v]
    return list(value)


def target_kind(cfg: dict) -> EvaluationKind:
    return EvaluationKind(cfg["target"])


def specs_from_config(cfg: dict, kinds: list[str] | None = None) -> list[ClassifierSpec]:
    """ClassifierSpecs for the configured kinds, sharing the run seed."""
    params = cfg["model_params"]
    out = []
    for kind in kinds if kinds is not None else cfg["models"]:
        kind = canonical_kind(kind)
        if kind in ("mlp-bp", "mlp-bpcg"):
            out.append(make_spec(kind, seed=cfg["seed"], **params.get("mlp", {})))
        elif kind == "hybrid":
            out.append(
                make_spec(
                    kind,
                    seed=cfg["seed"],
                    cart=params.get("cart", {}),
                    mlp=params.get("mlp", {}),
                )
            )
        elif kind in ("pnn", "cart", "svm"):
            out.append(make_spec(kind, seed=cfg["seed"], **params.get(kind, {})))
        else:
            out.append(make_spec(kind, seed=cfg["seed"]))
    return out


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(cfg: dict, input_path, package_version: str) -> dict:
    return {
        "config": cfg,
        "config_hash": config_hash(cfg),
        "input_csv": str(input_path),
        "input_sha256": file_sha256(input_path),
        "package_version": package_version,
    }
