import json

import numpy as np
import pytest

from csrminer.models import (
    load_model,
    make_spec,
    save_model,
    train,
)
from csrminer.models.base import ModelError


def small_dataset(seed=0, n=80, d=4):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = ((X[:, 0] + X[:, 1]) > 1.0).astype(int)
    return X, y


FAST_OVERRIDES = {
    "mlp-bp": {"hidden_neurons": 6, "epochs": 10},
    "mlp-bpcg": {"hidden_neurons": 6, "epochs": 10},
    "hybrid": {"mlp": {"hidden_neurons": 6, "epochs": 10}},
    "cart": {"max_depth": 4},
}


@pytest.mark.parametrize(
    "kind", ["linear", "mlp-bp", "mlp-bpcg", "pnn", "cart", "svm", "hybrid"]
)
def test_round_trip_preserves_predictions(kind, tmp_path):
    X, y = small_dataset()
    spec = make_spec(kind, seed=3, **FAST_OVERRIDES.get(kind, {}))
    model = train(spec, X, y)
    path = tmp_path / f"{kind}.model.json"
    save_model(model, path, scaling_fingerprint="abc123")
    again = load_model(path)
    assert again.kind == model.kind
    assert (again.predict(X) == model.predict(X)).all()
    assert np.allclose(again.predict_score(X), model.predict_score(X))
    assert again.metadata["scaling_fingerprint"] == "abc123"


def test_file_is_versioned_self_describing_json(tmp_path):
    X, y = small_dataset()
    model = train(make_spec("linear", seed=0), X, y)
    path = tmp_path / "m.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    assert doc["format_version"] == 1
    assert doc["kind"] == "linear"
    assert "payload" in doc


def test_unknown_version_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"format_version": 99, "kind": "linear", "payload": {}}))
    with pytest.raises(ModelError):
        load_model(path)


def test_save_is_deterministic(tmp_path):
    X, y = small_dataset()
    spec = make_spec("cart", seed=1, max_depth=4)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_model(train(spec, X, y), a)
    save_model(train(spec, X, y), b)
    assert a.read_bytes() == b.read_bytes()
