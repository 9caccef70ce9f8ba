"""Soft-margin SVM trained by sequential minimal optimization.

Kernel is the inhomogeneous polynomial K(u, v) = (u.v + 1)^degree
(degree 3 by default) so lower-order terms participate. The dual

    min 0.5 a' Q a - e' a,  0 <= a <= C,  y' a = 0,  Q_ij = y_i y_j K_ij

is solved by working-set SMO: with u_i = sum_j a_j y_j K_ij, optimality
requires

    m = max over I_up of (y_i - u_i)  <=  M = min over I_low of (y_i - u_i) + tol

where I_up/I_low are the index sets whose alpha can still move in the
violating direction. The first index is the worst violator from I_up;
its partner is chosen by the second-order rule (largest guaranteed
objective decrease b^2/eta among I_low candidates), which converges in
a fraction of the pair updates plain maximal-violating-pair selection
needs. Each step solves the two-variable subproblem in closed form
(clipped to the box), updates u with the two kernel rows (LRU-cached),
and the threshold b = (m + M)/2 at termination puts every KKT residual
below the tolerance. Pair updates preserve y' a = 0 to rounding.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from csrminer.models.base import ModelError, TrainedModel, as_xy, require_both_labels

DEFAULT_DEGREE = 3
DEFAULT_C = 1.0
DEFAULT_TOLERANCE = 1e-3
_ROW_CACHE_LIMIT = 1500
_MIN_STEP = 1e-14
# multipliers this close to a bound count as at the bound for the index
# sets; rounding in the pair updates can leave them an ulp inside
_BOUND_EPS = 1e-12


def poly_kernel(U: np.ndarray, v: np.ndarray, degree: int) -> np.ndarray:
    return (U @ v + 1.0) ** degree


class SVMModel(TrainedModel):
    kind = "svm"

    def __init__(self, X_sv, y_sv, alpha_sv, b, degree, n_features, metadata=None):
        super().__init__(n_features, metadata)
        self.X_sv = X_sv
        self.y_sv = y_sv  # in {-1, +1}
        self.alpha_sv = alpha_sv
        self.b = float(b)
        self.degree = int(degree)

    def predict_score(self, X):
        """Signed margin sum_i a_i y_i K(x_i, x) + b."""
        X = self._check_arity(X)
        if self.X_sv.shape[0] == 0:
            return np.full(X.shape[0], self.b)
        K = (X @ self.X_sv.T + 1.0) ** self.degree
        return K @ (self.alpha_sv * self.y_sv) + self.b

    def predict(self, X):
        return (self.predict_score(X) >= 0.0).astype(np.int64)


class _RowCache:
    def __init__(self, X: np.ndarray, degree: int, limit: int = _ROW_CACHE_LIMIT):
        self.X = X
        self.degree = degree
        self.limit = limit
        self.rows: OrderedDict[int, np.ndarray] = OrderedDict()

    def row(self, i: int) -> np.ndarray:
        r = self.rows.get(i)
        if r is None:
            r = poly_kernel(self.X, self.X[i], self.degree)
            if len(self.rows) >= self.limit:
                self.rows.popitem(last=False)
            self.rows[i] = r
        else:
            self.rows.move_to_end(i)
        return r


def train_svm(
    X,
    y,
    kernel_degree: int = DEFAULT_DEGREE,
    C: float = DEFAULT_C,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int | None = None,
    seed: int = 0,
) -> SVMModel:
    """SMO training; y in {0,1} maps to {-1,+1}.

    Stops when every KKT condition holds within tolerance; if the pair
    update budget (default max(50n, 20000)) runs out first, the current
    iterate is returned with metadata["converged"] = False.
    """
    if C <= 0:
        raise ModelError("C must be positive")
    if kernel_degree < 1:
        raise ModelError("kernel degree must be >= 1")
    if tolerance <= 0:
        raise ModelError("tolerance must be positive")
    X, y01 = as_xy(X, y)
    require_both_labels(y01)
    n = X.shape[0]
    ysign = np.where(y01 == 1, 1.0, -1.0)
    if max_iter is None:
        max_iter = max(50 * n, 20_000)

    alpha = np.zeros(n)
    u = np.zeros(n)  # decision values without b
    cache = _RowCache(X, kernel_degree)
    diag = (np.einsum("ij,ij->i", X, X) + 1.0) ** kernel_degree

    pos = ysign > 0
    c_hi = C - _BOUND_EPS
    iterations = 0
    converged = False
    while iterations < max_iter:
        f = ysign - u
        below_c = alpha < c_hi
        above_0 = alpha > _BOUND_EPS
        up = (pos & below_c) | (~pos & above_0)
        low = (~pos & below_c) | (pos & above_0)
        m_val = np.max(np.where(up, f, -np.inf))
        M_val = np.min(np.where(low, f, np.inf))
        if m_val - M_val <= tolerance:
            converged = True
            break
        i = int(np.argmax(np.where(up, f, -np.inf)))
        Ki = cache.row(i)
        # second-order partner: maximize b^2/eta over violating I_low
        b_vec = m_val - f
        candidates = low & (f < m_val)
        eta_vec = np.maximum(diag[i] + diag - 2.0 * Ki, 1e-12)
        j = int(np.argmin(np.where(candidates, -(b_vec * b_vec) / eta_vec, np.inf)))
        Kj = cache.row(j)
        eta = diag[i] + diag[j] - 2.0 * Ki[j]
        if eta <= 0.0:
            eta = 1e-12
        yi, yj = ysign[i], ysign[j]
        ai_old, aj_old = alpha[i], alpha[j]
        Ei = u[i] - yi
        Ej = u[j] - yj
        aj = aj_old + yj * (Ei - Ej) / eta
        if yi != yj:
            L = max(0.0, aj_old - ai_old)
            H = min(C, C + aj_old - ai_old)
        else:
            L = max(0.0, ai_old + aj_old - C)
            H = min(C, ai_old + aj_old)
        aj = min(max(aj, L), H)
        if abs(aj - aj_old) < _MIN_STEP:
            break  # numerically stuck; b below still uses the current gap
        ai = ai_old + yi * yj * (aj_old - aj)
        alpha[i], alpha[j] = ai, aj
        u += (ai - ai_old) * yi * Ki + (aj - aj_old) * yj * Kj
        iterations += 1

    f = ysign - u
    below_c = alpha < c_hi
    above_0 = alpha > _BOUND_EPS
    up = (pos & below_c) | (~pos & above_0)
    low = (~pos & below_c) | (pos & above_0)
    m_val = np.max(np.where(up, f, -np.inf))
    M_val = np.min(np.where(low, f, np.inf))
    converged = bool(m_val - M_val <= tolerance)
    b = 0.5 * (m_val + M_val)

    dual = float(alpha.sum() - 0.5 * np.dot(alpha * ysign, u))
    sv = alpha > 0
    meta = {
        "converged": converged,
        "iterations": iterations,
        "n_support_vectors": int(sv.sum()),
        "dual_objective": dual,
        "kkt_gap": float(m_val - M_val),
        "kkt_violation": _max_kkt_violation(alpha, ysign, u + b, C),
        "sum_alpha_y": float(np.dot(alpha, ysign)),
        "C": float(C),
        "tolerance": float(tolerance),
    }
    return SVMModel(
        X[sv].copy(), ysign[sv].copy(), alpha[sv].copy(), b, kernel_degree, X.shape[1], meta
    )


def _max_kkt_violation(alpha: np.ndarray, ysign: np.ndarray, f: np.ndarray, C: float) -> float:
    """Largest KKT residual given multipliers and decision values f = u + b."""
    margins = ysign * f
    viol = np.zeros(alpha.size)
    at_zero = alpha <= 1e-12
    at_c = alpha >= C - 1e-12
    free = ~at_zero & ~at_c
    viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
    viol[free] = np.abs(margins[free] - 1.0)
    viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
    return float(viol.max())
