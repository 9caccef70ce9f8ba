import numpy as np
import pytest

from csrminer.models import train_svm
from csrminer.models.base import ModelError
from csrminer.models.svm import poly_kernel


def project_box_hyperplane(v, ysign, C):
    """Euclidean projection onto {0 <= a <= C, y'a = 0} by bisection."""
    lo, hi = -(np.abs(v).max() + C + 1.0), np.abs(v).max() + C + 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        s = np.clip(v - mid * ysign, 0.0, C) @ ysign
        if s > 0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * ysign, 0.0, C)


def projected_gradient_dual(K, ysign, C, iters=150_000):
    """Slow independent solver for the dual QP; returns (alpha, objective).

    Runs until the iterate is a fixed point of the projected-gradient
    map (the step displacement is the PG residual scaled by the step
    size, so a ~0 displacement certifies stationarity); the cubic-kernel
    Gram is ill-conditioned enough that tens of thousands of iterations
    can be needed.
    """
    Q = K * np.outer(ysign, ysign)
    lam = np.linalg.eigvalsh(Q).max()
    eta = 1.0 / max(lam, 1e-12)
    a = np.zeros(len(ysign))
    for _ in range(iters):
        grad = Q @ a - 1.0
        a_new = project_box_hyperplane(a - eta * grad, ysign, C)
        done = np.abs(a_new - a).max() < 1e-13
        a = a_new
        if done:
            break
    obj = float(a.sum() - 0.5 * a @ Q @ a)
    return a, obj


def separable_set(rng, n=60, d=2, gap=2.0):
    n1 = n // 2
    X = np.vstack(
        [
            rng.normal(loc=-gap / 2, scale=0.4, size=(n - n1, d)),
            rng.normal(loc=+gap / 2, scale=0.4, size=(n1, d)),
        ]
    )
    y01 = np.concatenate([np.zeros(n - n1, dtype=int), np.ones(n1, dtype=int)])
    return X, y01


class TestKernel:
    def test_degree_3_arithmetic(self):
        # (1*1 + 1*1 + 1)^3 = 27
        v = np.array([1.0, 1.0])
        assert poly_kernel(v.reshape(1, -1), v, 3)[0] == 27.0


class TestSMO:
    def test_two_point_separable(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1])
        model = train_svm(X, y, C=10.0, tolerance=1e-6)
        assert (model.predict(X) == y).all()
        margins = np.where(y == 1, 1.0, -1.0) * model.predict_score(X)
        # both support vectors are unbounded at C=10, margins active
        assert (margins >= 1.0 - 1e-6).all()

    def test_separable_set_classified(self):
        rng = np.random.default_rng(21)
        X, y = separable_set(rng)
        model = train_svm(X, y)
        assert model.metadata["converged"]
        assert (model.predict(X) == y).mean() == 1.0

    def test_dual_matches_projected_gradient_oracle(self):
        rng = np.random.default_rng(77)
        for trial in range(3):
            X, y01 = separable_set(rng)
            ysign = np.where(y01 == 1, 1.0, -1.0)
            model = train_svm(X, y01, tolerance=1e-4)
            K = (X @ X.T + 1.0) ** 3
            _, obj_oracle = projected_gradient_dual(K, ysign, C=1.0)
            assert model.metadata["dual_objective"] == pytest.approx(
                obj_oracle, abs=1e-3
            )

    def test_kkt_and_constraint_invariants(self):
        rng = np.random.default_rng(5)
        X, y01 = separable_set(rng, n=80)
        model = train_svm(X, y01, tolerance=1e-3)
        assert abs(model.metadata["sum_alpha_y"]) < 1e-8
        assert model.metadata["kkt_violation"] <= 1e-3
        assert (model.alpha_sv >= 0).all()
        assert (model.alpha_sv <= model.metadata["C"] + 1e-12).all()

    def test_determinism(self):
        rng = np.random.default_rng(6)
        X, y01 = separable_set(rng)
        a = train_svm(X, y01)
        b = train_svm(X, y01)
        assert (a.alpha_sv == b.alpha_sv).all()
        assert a.b == b.b

    def test_iteration_cap_flags_nonconvergence(self):
        rng = np.random.default_rng(9)
        X = rng.random((60, 2))
        y = (rng.random(60) < 0.5).astype(int)
        y[:2] = [0, 1]
        model = train_svm(X, y, max_iter=3)
        assert model.metadata["converged"] is False
        assert model.metadata["iterations"] <= 3

    def test_parameter_validation(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0, 1])
        with pytest.raises(ModelError):
            train_svm(X, y, C=0.0)
        with pytest.raises(ModelError):
            train_svm(X, y, kernel_degree=0)
        with pytest.raises(ModelError):
            train_svm(X, y, tolerance=0.0)

    def test_overlapping_classes_still_converge(self):
        rng = np.random.default_rng(30)
        X, y = separable_set(rng, n=100, gap=0.6)
        model = train_svm(X, y)
        assert model.metadata["converged"]
        assert (model.predict(X) == y).mean() > 0.7
