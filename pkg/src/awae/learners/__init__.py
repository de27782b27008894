"""Base classifiers trained once per chunk behind a common fit/predict/support contract."""

from __future__ import annotations

import numpy as np

from awae.errors import TrainingError
from awae.learners.base import (
    LEARNER_KINDS,
    Classifier,
    ConstantClassifier,
    LearnerConfig,
    normalize_kind,
    notify_training,
    training_listener,
)
from awae.learners.gnb import GaussianNB
from awae.learners.hoeffding import HoeffdingTree, hellinger_gain
from awae.learners.mlp import MLP
from awae.learners.serialize import dump_model, load_model

__all__ = [
    "LEARNER_KINDS",
    "Classifier",
    "ConstantClassifier",
    "GaussianNB",
    "HoeffdingTree",
    "LearnerConfig",
    "MLP",
    "dump_model",
    "fit",
    "fit_arrays",
    "hellinger_gain",
    "load_model",
    "member_seed",
    "predict",
    "support",
    "training_listener",
]


def member_seed(base_seed: int, chunk_index: int) -> np.random.SeedSequence:
    """Seed for the model trained on chunk ``chunk_index``; independent of run history."""
    return np.random.SeedSequence([int(base_seed), int(chunk_index)])


def fit_arrays(
    kind: str,
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    config: LearnerConfig | None = None,
    seed: int | np.random.SeedSequence = 0,
    chunk_index: int = -1,
) -> Classifier:
    config = (config or LearnerConfig()).validate()
    kind = normalize_kind(kind)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        raise TrainingError(f"chunk {chunk_index}: no labeled instances to train on")
    notify_training(chunk_index, X, y)
    n_features = X.shape[1]
    present = np.unique(y)
    if kind != "mlp" and present.size == 1:
        return ConstantClassifier(n_classes, n_features, int(present[0]))
    if kind == "gnb":
        return GaussianNB(n_classes, n_features, config.gnb_var_smoothing).fit(X, y)
    if kind == "hoeffding_tree":
        return HoeffdingTree(
            n_classes,
            n_features,
            config.ht_grace_period,
            config.ht_split_confidence,
            config.ht_tie_threshold,
        ).fit(X, y)
    return MLP(
        n_classes,
        n_features,
        hidden=config.mlp_hidden,
        max_iter=config.mlp_max_iter,
        learning_rate=config.mlp_learning_rate,
        batch_size=config.mlp_batch_size,
        tol=config.mlp_tol,
        n_iter_no_change=config.mlp_n_iter_no_change,
        seed=seed,
    ).fit(X, y)


def fit(kind: str, chunk, config: LearnerConfig | None = None) -> Classifier:
    """Train a fresh model of ``kind`` on the labeled instances of ``chunk``.

    The MLP seed is derived from ``config.seed`` and the chunk index, so the
    same chunk always yields the same network.
    """
    config = config or LearnerConfig()
    if chunk.y is None:
        raise TrainingError(f"chunk {chunk.index}: no labeled instances to train on")
    return fit_arrays(
        kind,
        chunk.X,
        chunk.y,
        chunk.n_classes,
        config,
        seed=member_seed(config.seed, chunk.index),
        chunk_index=chunk.index,
    )


def predict(model: Classifier, features) -> np.ndarray:
    return model.predict(features)


def support(model: Classifier, features) -> np.ndarray:
    return model.support(features)
