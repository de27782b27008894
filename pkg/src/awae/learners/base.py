from __future__ import annotations

import contextlib
from dataclasses import asdict, dataclass
from typing import Callable, Iterator, Literal

import numpy as np

from awae.errors import ConfigurationError, ShapeError

LearnerKind = Literal["gnb", "hoeffding_tree", "mlp"]
LEARNER_KINDS = ("gnb", "hoeffding_tree", "mlp")
KIND_ALIASES = {"ht": "hoeffding_tree", "gnb": "gnb", "mlp": "mlp", "hoeffding_tree": "hoeffding_tree"}


@dataclass
class LearnerConfig:
    """Hyperparameters of the three base learners.

    Defaults follow the experimental setup: variance smoothing 1e-9, grace
    period 200, one hidden layer of 100 units trained for at most 200 epochs.
    """

    gnb_var_smoothing: float = 1e-9
    ht_grace_period: int = 200
    ht_split_confidence: float = 1e-7
    ht_tie_threshold: float = 0.05
    mlp_hidden: int = 100
    mlp_max_iter: int = 200
    mlp_learning_rate: float = 1e-3
    mlp_batch_size: int = 200
    mlp_tol: float = 1e-4
    mlp_n_iter_no_change: int = 10
    seed: int = 0

    def validate(self) -> "LearnerConfig":
        if self.gnb_var_smoothing < 0:
            raise ConfigurationError("gnb_var_smoothing", "must be non-negative")
        for name in ("ht_grace_period", "mlp_hidden", "mlp_max_iter", "mlp_batch_size", "mlp_n_iter_no_change"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(name, "must be a positive integer")
        if not 0.0 < self.ht_split_confidence < 1.0:
            raise ConfigurationError("ht_split_confidence", "must lie in (0, 1)")
        if self.mlp_learning_rate <= 0:
            raise ConfigurationError("mlp_learning_rate", "must be positive")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def normalize_kind(kind: str) -> str:
    try:
        return KIND_ALIASES[kind]
    except KeyError:
        raise ConfigurationError("learner", f"unknown learner kind {kind!r}; expected one of {LEARNER_KINDS}") from None


class Classifier:
    """Common surface of every base model.

    Subclasses implement ``_support`` for a validated feature matrix; a fitted
    model is never mutated afterwards.
    """

    kind: str = ""

    def __init__(self, n_classes: int, n_features: int):
        self.n_classes = int(n_classes)
        self.n_features = int(n_features)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} features, got shape {X.shape}")
        return X

    def support(self, X) -> np.ndarray:
        """Per-class scores of shape (n, n_classes); rows are non-negative and sum to 1."""
        return self._support(self._check(X))

    def predict(self, X) -> np.ndarray:
        # np.argmax returns the first maximum, i.e. ties go to the lower class
        return np.argmax(self.support(X), axis=1)

    def _support(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ConstantClassifier(Classifier):
    """Model fitted on a single-class chunk: full support for that class everywhere."""

    kind = "constant"

    def __init__(self, n_classes: int, n_features: int, label: int):
        super().__init__(n_classes, n_features)
        self.label = int(label)

    def _support(self, X):
        out = np.zeros((X.shape[0], self.n_classes))
        out[:, self.label] = 1.0
        return out


TrainingListener = Callable[[int, np.ndarray, np.ndarray], None]
_listeners: list[TrainingListener] = []


def notify_training(chunk_index: int, X: np.ndarray, y: np.ndarray) -> None:
    for listener in _listeners:
        listener(chunk_index, X, y)


@contextlib.contextmanager
def training_listener(listener: TrainingListener) -> Iterator[None]:
    """Call ``listener(chunk_index, X, y)`` for every training set seen while active."""
    _listeners.append(listener)
    try:
        yield
    finally:
        _listeners.remove(listener)
