"""Baseline chunk ensembles (SEA, AWE-lite, AUE-lite) and single-model references.

AWE-lite and AUE-lite follow the MSE weighting idea of the originals but are
simplified re-implementations, hence the suffix.
"""

from __future__ import annotations

import numpy as np

from awae import learners
from awae.ensemble import ChunkEnsemble, ClassifierMember, EnsemblePool
from awae.errors import ConfigurationError
from awae.learners import LearnerConfig
from awae.stream import DataChunk


def _new_member(ens: ChunkEnsemble, labeled: DataChunk) -> ClassifierMember:
    model = learners.fit(ens.learner_kind, labeled, ens.learner_config)
    return ClassifierMember(model, weight=1.0, residence=0, birth_chunk=labeled.index)


def _age(pool: EnsemblePool) -> None:
    for m in pool.members:
        m.residence += 1


def member_mse(model, X: np.ndarray, y: np.ndarray) -> float:
    """Mean squared error of the support given to the true class."""
    s = model.support(X)
    return float(np.mean((1.0 - s[np.arange(y.shape[0]), y]) ** 2))


def random_mse(y: np.ndarray, n_classes: int) -> float:
    """MSE of a classifier predicting the class priors at random; p(1-p) for two classes."""
    p = np.bincount(y, minlength=n_classes) / y.shape[0]
    return float(np.sum(p * (1.0 - p) ** 2))


def awe_weights(pool: EnsemblePool, labeled: DataChunk) -> np.ndarray:
    mse_r = random_mse(labeled.y, labeled.n_classes)
    return np.array([max(0.0, mse_r - member_mse(m.model, labeled.X, labeled.y)) for m in pool.members])


def _keep_best(pool: EnsemblePool, scores: np.ndarray, capacity: int) -> None:
    """Retain the ``capacity`` highest-scoring members (ties keep the younger), preserving order."""
    if len(pool) <= capacity:
        return
    births = np.array([m.birth_chunk for m in pool.members])
    order = np.lexsort((-births, -scores))
    keep = sorted(order[:capacity].tolist())
    pool.members = [pool.members[i] for i in keep]


def _fallback_if_silent(pool: EnsemblePool, newest: ClassifierMember) -> None:
    if pool.members and pool.weights.sum() <= 0.0:
        target = newest if newest in pool.members else max(pool.members, key=lambda m: m.birth_chunk)
        target.weight = 1.0


class SEA(ChunkEnsemble):
    """Streaming Ensemble Algorithm: drop the least accurate member, unweighted majority vote."""

    method = "sea"

    def process(self, chunk: DataChunk, labeled: DataChunk) -> None:
        self.pool.n_classes = chunk.n_classes
        self.pool.members.append(_new_member(self, labeled))
        if len(self.pool) > self.pool.capacity:
            preds = self.pool.member_predictions(labeled.X)
            acc = (preds == labeled.y[None, :]).mean(axis=1)
            worst = np.flatnonzero(acc == acc.min())
            births = np.array([self.pool.members[i].birth_chunk for i in worst])
            del self.pool.members[int(worst[np.argmin(births)])]
        for m in self.pool.members:
            m.weight = 1.0
        _age(self.pool)


class AWELite(ChunkEnsemble):
    """Accuracy Weighted Ensemble, simplified: weight = max(0, MSE_random - MSE_member)."""

    method = "awe"

    def process(self, chunk: DataChunk, labeled: DataChunk) -> None:
        self.pool.n_classes = chunk.n_classes
        newest = _new_member(self, labeled)
        self.pool.members.append(newest)
        self._reweight(labeled)
        self._finish(labeled, newest)

    def _reweight(self, labeled: DataChunk) -> None:
        for m, w in zip(self.pool.members, awe_weights(self.pool, labeled)):
            m.weight = float(w)

    def _finish(self, labeled: DataChunk, newest: ClassifierMember) -> None:
        _keep_best(self.pool, self.pool.weights, self.pool.capacity)
        _fallback_if_silent(self.pool, newest)
        _age(self.pool)


class AUELite(AWELite):
    """Accuracy Updated Ensemble, simplified.

    Retained older members are refit on their birth-chunk reservoir plus the
    current labeled data, then all weights are recomputed.
    """

    method = "aue"

    def process(self, chunk: DataChunk, labeled: DataChunk) -> None:
        self.pool.n_classes = chunk.n_classes
        newest = _new_member(self, labeled)
        limit = chunk.n_instances
        newest.reservoir_X = labeled.X[:limit].copy()
        newest.reservoir_y = labeled.y[:limit].copy()
        self.pool.members.append(newest)
        self._reweight(labeled)
        _keep_best(self.pool, self.pool.weights, self.pool.capacity)

        for m in self.pool.members:
            if m is newest:
                continue
            X = np.vstack([m.reservoir_X, labeled.X])
            y = np.concatenate([m.reservoir_y, labeled.y])
            seed = np.random.SeedSequence([int(self.learner_config.seed), m.birth_chunk, labeled.index])
            m.model = learners.fit_arrays(
                self.learner_kind, X, y, labeled.n_classes, self.learner_config, seed=seed, chunk_index=labeled.index
            )
        self._reweight(labeled)
        _fallback_if_silent(self.pool, newest)
        _age(self.pool)


class StaticModel(ChunkEnsemble):
    """One model trained on the first chunk and never updated."""

    method = "static"

    def __init__(self, learner_kind="gnb", learner_config=None, n_classes=2, capacity: int = 1):
        super().__init__(1, learner_kind, learner_config, n_classes)

    def process(self, chunk: DataChunk, labeled: DataChunk) -> None:
        if not self.pool.members:
            self.pool.n_classes = chunk.n_classes
            self.pool.members.append(_new_member(self, labeled))
        _age(self.pool)


class SingleModel(ChunkEnsemble):
    """One model retrained from scratch on every chunk."""

    method = "single"

    def __init__(self, learner_kind="gnb", learner_config=None, n_classes=2, capacity: int = 1):
        super().__init__(1, learner_kind, learner_config, n_classes)

    def process(self, chunk: DataChunk, labeled: DataChunk) -> None:
        self.pool.n_classes = chunk.n_classes
        self.pool.members = [_new_member(self, labeled)]
        _age(self.pool)


REFERENCE_METHODS = {"sea": SEA, "awe": AWELite, "aue": AUELite, "static": StaticModel, "single": SingleModel}


def make_reference(method: str, capacity: int = 10, learner_kind: str = "gnb",
                   learner_config: LearnerConfig | None = None, n_classes: int = 2) -> ChunkEnsemble:
    try:
        cls = REFERENCE_METHODS[method]
    except KeyError:
        raise ConfigurationError("method", f"unknown reference method {method!r}") from None
    if capacity < 1:
        raise ConfigurationError("capacity", "must be a positive integer")
    if cls in (StaticModel, SingleModel):
        return cls(learner_kind, learner_config, n_classes)
    return cls(capacity, learner_kind, learner_config, n_classes)
