import numpy as np
import pytest

from csrminer.models import ArityMismatch, predict, predict_score, train_linear
from csrminer.models.base import BinaryLabel, ModelError


def normal_equations(A, t):
    # independent oracle: solve (A'A) w = A' t directly
    return np.linalg.solve(A.T @ A, A.T @ t)


class TestLinear:
    def test_separable_1d(self):
        X = np.array([[0.1], [0.9], [0.15], [0.85]])
        y = np.array([0, 1, 0, 1])
        model = train_linear(X, y)
        assert (model.predict(X) == y).all()

    def test_identity_design_recovers_targets(self):
        X = np.eye(4)
        y = np.array([0, 1, 1, 0])
        model = train_linear(X, y, fit_bias=False)
        assert np.allclose(model.weights, y, atol=1e-12)

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            X = rng.normal(size=(20, 5))
            y = (rng.random(20) < 0.5).astype(int)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            model = train_linear(X, y)
            A = np.hstack([X, np.ones((20, 1))])
            w_oracle = normal_equations(A, y.astype(float))
            assert np.abs(model.weights - w_oracle).max() < 1e-8

    def test_residual_minimality_under_perturbation(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(40, 6))
        y = (rng.random(40) < 0.4).astype(int)
        model = train_linear(X, y)
        A = np.hstack([X, np.ones((40, 1))])
        base = np.sum((A @ model.weights - y) ** 2)
        for _ in range(200):
            w = model.weights + rng.normal(scale=1e-3, size=model.weights.shape)
            assert np.sum((A @ w - y) ** 2) >= base - 1e-12

    def test_degenerate_design_flagged_but_solvable(self):
        X = np.ones((6, 3)) * 0.5
        y = np.array([0, 1, 0, 1, 0, 1])
        model = train_linear(X, y)
        assert model.metadata["degenerate_design"] is True
        assert np.isfinite(model.predict_score(X)).all()

    def test_score_is_affine(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(30, 4))
        y = (rng.random(30) < 0.5).astype(int)
        y[:2] = [0, 1]
        model = train_linear(X, y)
        x, z = rng.normal(size=4), rng.normal(size=4)
        lhs = predict_score(model, x) + predict_score(model, z)
        rhs = predict_score(model, x + z) + predict_score(model, np.zeros(4))
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_uniform_predict_interface(self):
        X = np.array([[0.1], [0.9]])
        model = train_linear(X, np.array([0, 1]))
        assert predict(model, np.array([0.95])) is BinaryLabel.CORRECT
        assert predict(model, np.array([0.05])) is BinaryLabel.WRONG

    def test_arity_mismatch(self):
        model = train_linear(np.array([[0.1], [0.9]]), np.array([0, 1]))
        with pytest.raises(ArityMismatch):
            model.predict(np.zeros((3, 2)))

    def test_single_label_rejected(self):
        with pytest.raises(ModelError):
            train_linear(np.array([[0.1], [0.9]]), np.array([1, 1]))

    def test_determinism(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(25, 3))
        y = (rng.random(25) < 0.5).astype(int)
        y[:2] = [0, 1]
        m1 = train_linear(X, y)
        m2 = train_linear(X, y)
        assert (m1.weights == m2.weights).all()
