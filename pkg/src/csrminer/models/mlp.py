"""One-hidden-layer perceptron: backpropagation, optional CG phase.

Architecture is inputs -> H sigmoid units -> 1 sigmoid output with 0/1
target coding and squared-error loss L = (1/2n) sum (o - y)^2. Phase one
is classic per-record backpropagation with momentum, one seeded shuffled
pass per epoch (the inner loop is numba-compiled; a pure-Python fallback
keeps things working, slowly, without numba). The optional second phase
runs Polak-Ribiere conjugate gradient with Armijo backtracking on the
full-batch loss, warm-started from the backprop weights. Throughout both
phases the weights with the lowest validation loss seen are kept.

Weight layout: W1 is (d+1, H) with the bias in the last row, W2 is
(H+1,) with the bias last; initialization is uniform [-0.5, 0.5] scaled
by 1/sqrt(fan-in), seeded.
"""

from __future__ import annotations

import math

import numpy as np

from csrminer.models.base import (
    ModelError,
    NonFiniteLoss,
    TrainedModel,
    as_xy,
)

DEFAULT_HIDDEN = 113
DEFAULT_EPOCHS = 100
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_MOMENTUM = 0.9
ARMIJO_C1 = 1e-4

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


@njit(cache=True)
def _sgd_epoch(Xb, y, W1, W2, V1, V2, lr, momentum, order, h, hg):
    """One shuffled pass of per-record updates, in place.

    Per record the gradient of 0.5*(o - y)^2 is taken at the current
    weights (hidden deltas use W2 before its update).
    """
    d1 = Xb.shape[1]
    H = W1.shape[1]
    for t in range(order.size):
        i = order[t]
        for j in range(H):
            s = 0.0
            for k in range(d1):
                s += Xb[i, k] * W1[k, j]
            h[j] = 1.0 / (1.0 + math.exp(-s))
        s2 = W2[H]
        for j in range(H):
            s2 += h[j] * W2[j]
        o = 1.0 / (1.0 + math.exp(-s2))
        d2 = (o - y[i]) * o * (1.0 - o)
        for j in range(H):
            hg[j] = d2 * W2[j] * h[j] * (1.0 - h[j])
        for j in range(H):
            V2[j] = momentum * V2[j] - lr * (d2 * h[j])
            W2[j] += V2[j]
        V2[H] = momentum * V2[H] - lr * d2
        W2[H] += V2[H]
        for k in range(d1):
            xk = Xb[i, k]
            for j in range(H):
                V1[k, j] = momentum * V1[k, j] - lr * (hg[j] * xk)
                W1[k, j] += V1[k, j]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # exp overflow for very negative z saturates to inf and the result
    # to exactly 0.0, which is the right limit; silence the warning only
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _with_bias(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def init_weights(n_features: int, hidden: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    fan1 = n_features + 1
    fan2 = hidden + 1
    W1 = rng.uniform(-0.5, 0.5, (fan1, hidden)) / math.sqrt(fan1)
    W2 = rng.uniform(-0.5, 0.5, fan2) / math.sqrt(fan2)
    return W1, W2


def pack(W1: np.ndarray, W2: np.ndarray) -> np.ndarray:
    return np.concatenate([W1.ravel(), W2])


def unpack(w: np.ndarray, n_features: int, hidden: int) -> tuple[np.ndarray, np.ndarray]:
    d1 = n_features + 1
    W1 = w[: d1 * hidden].reshape(d1, hidden)
    W2 = w[d1 * hidden :]
    return W1, W2


def forward(Xb: np.ndarray, W1: np.ndarray, W2: np.ndarray) -> np.ndarray:
    A1 = _sigmoid(Xb @ W1)
    return _sigmoid(A1 @ W2[:-1] + W2[-1])


def batch_loss(w: np.ndarray, Xb: np.ndarray, y: np.ndarray, hidden: int) -> float:
    W1, W2 = unpack(w, Xb.shape[1] - 1, hidden)
    o = forward(Xb, W1, W2)
    r = o - y
    return float(0.5 * np.mean(r * r))


def batch_loss_grad(
    w: np.ndarray, Xb: np.ndarray, y: np.ndarray, hidden: int
) -> tuple[float, np.ndarray]:
    """Full-batch loss and its analytic gradient in packed layout."""
    n = Xb.shape[0]
    W1, W2 = unpack(w, Xb.shape[1] - 1, hidden)
    A1 = _sigmoid(Xb @ W1)
    o = _sigmoid(A1 @ W2[:-1] + W2[-1])
    r = o - y
    loss = float(0.5 * np.mean(r * r))
    d2 = r * o * (1.0 - o) / n
    gW2 = np.concatenate([A1.T @ d2, [d2.sum()]])
    dA1 = np.outer(d2, W2[:-1]) * A1 * (1.0 - A1)
    gW1 = Xb.T @ dA1
    return loss, pack(gW1, gW2)


def conjugate_gradient_minimize(
    loss_grad,
    w0: np.ndarray,
    iterations: int,
    restart_every: int | None = None,
    on_iterate=None,
) -> tuple[np.ndarray, list[float]]:
    """Polak-Ribiere (nonnegative beta) CG with Armijo backtracking.

    loss_grad(w) -> (loss, grad). Directions restart to steepest descent
    every restart_every iterations (default: the weight count) and
    whenever the computed direction fails to descend; the loss history
    is non-increasing by construction. on_iterate(w, loss) is called
    after each accepted step.
    """
    w = w0.copy()
    f, g = loss_grad(w)
    history = [f]
    d = -g
    if restart_every is None:
        restart_every = w.size
    for it in range(iterations):
        slope = float(g @ d)
        if slope >= 0.0:
            d = -g
            slope = float(g @ d)
            if slope >= 0.0:  # zero gradient: converged
                break
        # Armijo backtracking from a unit step
        alpha = 1.0
        accepted = False
        for _ in range(50):
            trial = w + alpha * d
            f_trial, g_trial = loss_grad(trial)
            if np.isfinite(f_trial) and f_trial <= f + ARMIJO_C1 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if (d == -g).all():
                break  # cannot decrease even along steepest descent
            d = -g
            continue
        g_prev = g
        w, f, g = trial, f_trial, g_trial
        history.append(f)
        if on_iterate is not None:
            on_iterate(w, f)
        if (it + 1) % restart_every == 0:
            beta = 0.0
        else:
            denom = float(g_prev @ g_prev)
            beta = max(0.0, float(g @ (g - g_prev)) / denom) if denom > 0 else 0.0
        d = -g + beta * d
    return w, history


class MLPModel(TrainedModel):
    def __init__(self, W1, W2, kind: str, metadata=None):
        super().__init__(W1.shape[0] - 1, metadata)
        self.kind = kind
        self.W1 = np.asarray(W1, dtype=float)
        self.W2 = np.asarray(W2, dtype=float)

    @property
    def hidden_neurons(self) -> int:
        return self.W1.shape[1]

    def predict_score(self, X):
        X = self._check_arity(X)
        return forward(_with_bias(X), self.W1, self.W2)

    def predict(self, X):
        return (self.predict_score(X) >= 0.5).astype(np.int64)


def _python_sgd_epoch(Xb, y, W1, W2, V1, V2, lr, momentum, order):
    # slow fallback mirroring _sgd_epoch; only used without numba
    H = W1.shape[1]
    for i in order:
        x = Xb[i]
        h = 1.0 / (1.0 + np.exp(-(x @ W1)))
        o = 1.0 / (1.0 + math.exp(-(h @ W2[:H] + W2[H])))
        d2 = (o - y[i]) * o * (1.0 - o)
        hg = d2 * W2[:H] * h * (1.0 - h)
        V2[:H] = momentum * V2[:H] - lr * d2 * h
        V2[H] = momentum * V2[H] - lr * d2
        W2 += V2
        V1 *= momentum
        V1 -= lr * np.outer(x, hg)
        W1 += V1


def train_mlp(
    X,
    y,
    X_val=None,
    y_val=None,
    hidden_neurons: int = DEFAULT_HIDDEN,
    epochs: int = DEFAULT_EPOCHS,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    momentum: float = DEFAULT_MOMENTUM,
    phase2: str | None = None,
    seed: int = 0,
) -> MLPModel:
    """Backpropagation training, optionally followed by a CG phase.

    phase2 is None (plain BP) or "cg": `epochs` conjugate-gradient
    iterations on the full-batch loss, warm-started from the BP weights.
    When a validation set is given, the returned weights are those with
    the lowest validation loss seen across both phases; otherwise the
    final weights. Raises NonFiniteLoss (with the epoch) on divergence.
    """
    if hidden_neurons < 1:
        raise ModelError("hidden_neurons must be >= 1")
    if epochs < 1:
        raise ModelError("epochs must be >= 1")
    if phase2 not in (None, "cg"):
        raise ModelError(f"unknown phase2 {phase2!r}")
    X, y = as_xy(X, y)
    yf = y.astype(float)
    Xb = _with_bias(X)
    have_val = X_val is not None and y_val is not None and len(X_val) > 0
    if have_val:
        X_val, y_val = as_xy(X_val, y_val)
        Xvb = _with_bias(X_val)
        yvf = y_val.astype(float)

    W1, W2 = init_weights(X.shape[1], hidden_neurons, seed)
    V1 = np.zeros_like(W1)
    V2 = np.zeros_like(W2)
    h = np.empty(hidden_neurons)
    hg = np.empty(hidden_neurons)
    shuffle_rng = np.random.default_rng(seed + 1)

    best = None  # (val_loss, W1, W2, phase, step)

    def consider(W1c, W2c, phase, step):
        nonlocal best
        if not have_val:
            return
        vl = batch_loss(pack(W1c, W2c), Xvb, yvf, hidden_neurons)
        if best is None or vl < best[0]:
            best = (vl, W1c.copy(), W2c.copy(), phase, step)

    epoch_fn = _sgd_epoch if _HAVE_NUMBA else _python_sgd_epoch
    for epoch in range(1, epochs + 1):
        order = shuffle_rng.permutation(Xb.shape[0])
        if _HAVE_NUMBA:
            epoch_fn(Xb, yf, W1, W2, V1, V2, learning_rate, momentum, order, h, hg)
        else:
            epoch_fn(Xb, yf, W1, W2, V1, V2, learning_rate, momentum, order)
        # sigmoid/MSE keeps the loss finite unless the weights blow up
        if not (np.isfinite(W1).all() and np.isfinite(W2).all()):
            raise NonFiniteLoss(epoch)
        consider(W1, W2, "bp", epoch)

    cg_iterations = 0
    if phase2 == "cg":
        w = pack(W1, W2)
        cg_steps = 0

        def track(wc, loss):
            nonlocal cg_steps
            cg_steps += 1
            W1c, W2c = unpack(wc, X.shape[1], hidden_neurons)
            consider(W1c, W2c, "cg", cg_steps)

        w, history = conjugate_gradient_minimize(
            lambda wv: batch_loss_grad(wv, Xb, yf, hidden_neurons),
            w,
            iterations=epochs,
            on_iterate=track,
        )
        W1, W2 = unpack(w, X.shape[1], hidden_neurons)
        cg_iterations = len(history) - 1

    if best is not None:
        val_loss, W1, W2, phase, step = best
        best_info = {"best_val_loss": val_loss, "best_phase": phase, "best_step": step}
    else:
        best_info = {}

    kind = "mlp-bpcg" if phase2 == "cg" else "mlp-bp"
    meta = {
        "epochs_run": epochs,
        "cg_iterations": cg_iterations,
        "final_train_loss": batch_loss(pack(W1, W2), Xb, yf, hidden_neurons),
        **best_info,
    }
    return MLPModel(W1, W2, kind, meta)
