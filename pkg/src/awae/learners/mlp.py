from __future__ import annotations

import numpy as np

from awae.learners.base import Classifier

PARAM_NAMES = ("W1", "b1", "W2", "b2")


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: dict, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pre = X @ params["W1"] + params["b1"]
    hidden = np.maximum(pre, 0.0)
    probs = softmax(hidden @ params["W2"] + params["b2"])
    return pre, hidden, probs


def loss_and_gradients(params: dict, X: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
    """Mean cross-entropy of the network on (X, y) and its gradient per parameter."""
    n = X.shape[0]
    pre, hidden, probs = forward(params, X)
    rows = np.arange(n)
    loss = -np.log(np.clip(probs[rows, y], 1e-300, None)).mean()

    d_logits = probs.copy()
    d_logits[rows, y] -= 1.0
    d_logits /= n
    d_hidden = (d_logits @ params["W2"].T) * (pre > 0.0)
    grads = {
        "W2": hidden.T @ d_logits,
        "b2": d_logits.sum(axis=0),
        "W1": X.T @ d_hidden,
        "b1": d_hidden.sum(axis=0),
    }
    return float(loss), grads


class Adam:
    def __init__(self, params: dict, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = learning_rate, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        lr_t = self.lr * np.sqrt(1.0 - self.beta2**self.t) / (1.0 - self.beta1**self.t)
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= lr_t * self.m[k] / (np.sqrt(self.v[k]) + self.eps)


class MLP(Classifier):
    """Single hidden layer ReLU network with softmax output, trained by Adam.

    Training runs minibatch epochs over the chunk and stops early once the
    epoch loss has failed to improve by ``tol`` for ``n_iter_no_change``
    consecutive epochs.
    """

    kind = "mlp"

    def __init__(
        self,
        n_classes: int,
        n_features: int,
        hidden: int = 100,
        max_iter: int = 200,
        learning_rate: float = 1e-3,
        batch_size: int = 200,
        tol: float = 1e-4,
        n_iter_no_change: int = 10,
        seed: int | np.random.SeedSequence = 0,
    ):
        super().__init__(n_classes, n_features)
        self.hidden = hidden
        self.max_iter = max_iter
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.tol = tol
        self.n_iter_no_change = n_iter_no_change
        self.rng = np.random.default_rng(seed)
        self.params = {
            "W1": glorot_uniform(n_features, hidden, self.rng),
            "b1": np.zeros(hidden),
            "W2": glorot_uniform(hidden, n_classes, self.rng),
            "b2": np.zeros(n_classes),
        }
        self.loss_curve: list[float] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "MLP":
        X = self._check(X)
        y = np.asarray(y, dtype=np.int64)
        n = X.shape[0]
        batch = min(self.batch_size, n)
        opt = Adam(self.params, self.learning_rate)
        best, stale = np.inf, 0
        for _ in range(self.max_iter):
            order = self.rng.permutation(n)
            total = 0.0
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                loss, grads = loss_and_gradients(self.params, X[idx], y[idx])
                opt.step(self.params, grads)
                total += loss * idx.size
            epoch_loss = total / n
            self.loss_curve.append(epoch_loss)
            if epoch_loss > best - self.tol:
                stale += 1
                if stale >= self.n_iter_no_change:
                    break
            else:
                stale = 0
            best = min(best, epoch_loss)
        return self

    def _support(self, X):
        return forward(self.params, X)[2]
