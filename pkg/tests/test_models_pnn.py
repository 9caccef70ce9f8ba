import numpy as np
import pytest

from csrminer.models import train_pnn
from csrminer.models.base import ModelError


def one_nearest_neighbor(X_train, y_train, X_query):
    # brute-force oracle
    out = np.empty(X_query.shape[0], dtype=np.int64)
    for i, q in enumerate(X_query):
        d = np.sum((X_train - q) ** 2, axis=1)
        out[i] = y_train[np.argmin(d)]
    return out


class TestPNN:
    def test_two_points_nearest_wins(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1])
        for sigma in (0.01, 0.5, 3.0):
            model = train_pnn(X, y, sigma=sigma)
            assert model.predict(np.array([[0.1, 0.1]]))[0] == 0
            assert model.predict(np.array([[0.9, 0.8]]))[0] == 1

    def test_tiny_sigma_equals_1nn_oracle(self):
        rng = np.random.default_rng(31)
        X = rng.random((150, 8))
        y = (rng.random(150) < 0.5).astype(int)
        y[:2] = [0, 1]
        model = train_pnn(X, y, sigma=1e-6)
        Q = rng.random((200, 8))
        assert (model.predict(Q) == one_nearest_neighbor(X, y, Q)).all()

    def test_query_on_training_point(self):
        rng = np.random.default_rng(7)
        X = rng.random((40, 3))
        y = (rng.random(40) < 0.5).astype(int)
        y[:2] = [0, 1]
        model = train_pnn(X, y, sigma=1e-4)
        assert (model.predict(X) == y).all()

    def test_duplication_invariance(self):
        rng = np.random.default_rng(13)
        X = rng.random((60, 4))
        y = (rng.random(60) < 0.3).astype(int)
        y[:2] = [0, 1]
        Q = rng.random((50, 4))
        a = train_pnn(X, y, sigma=0.2)
        b = train_pnn(np.vstack([X, X]), np.concatenate([y, y]), sigma=0.2)
        assert np.allclose(a.predict_score(Q), b.predict_score(Q))
        assert (a.predict(Q) == b.predict(Q)).all()

    def test_hidden_layer_size_is_training_count(self):
        X = np.random.default_rng(0).random((25, 2))
        y = np.array([0, 1] * 12 + [0])
        model = train_pnn(X, y)
        assert model.metadata["hidden_neurons"] == 25

    def test_sigma_validation(self):
        X = np.array([[0.0], [1.0]])
        with pytest.raises(ModelError):
            train_pnn(X, np.array([0, 1]), sigma=0.0)
