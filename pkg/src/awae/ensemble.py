"""Active Weighted Aging Ensemble: weighted voting, weighting, aging, rejuvenation and pruning.

The pool is a plain list of :class:`ClassifierMember`; list position is the
member identifier, so "reindexing" after a removal is implicit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from awae import learners
from awae.errors import ConfigurationError, DiversityUndefinedError, StateError
from awae.learners import Classifier, LearnerConfig
from awae.stream import DataChunk

Weighting = Literal["same", "kuncheva", "proportional", "bell"]
Aging = Literal["proportional", "constant", "gaussian"]
WEIGHTINGS = ("same", "kuncheva", "proportional", "bell")
AGINGS = ("proportional", "constant", "gaussian")

KUNCHEVA_CAP = 1e6
TIE_TOLERANCE = 1e-12
_BELL_NORM = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass
class ClassifierMember:
    """A trained model with its vote weight and residence counter.

    ``accuracy`` is the member's accuracy on the most recent labeled chunk;
    ``reservoir_*`` hold birth-chunk data for methods that refit members.
    """

    model: Classifier
    weight: float = 0.0
    residence: int = 0
    birth_chunk: int = 0
    accuracy: float = 0.0
    reservoir_X: np.ndarray | None = None
    reservoir_y: np.ndarray | None = None


@dataclass
class EnsemblePool:
    capacity: int
    n_classes: int = 2
    members: list[ClassifierMember] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members], dtype=np.float64)

    @property
    def residences(self) -> np.ndarray:
        return np.array([m.residence for m in self.members], dtype=np.int64)

    def member_predictions(self, X: np.ndarray) -> np.ndarray:
        """Crisp predictions of every member, shape (|pool|, n)."""
        if not self.members:
            return np.empty((0, X.shape[0]), dtype=np.int64)
        return np.stack([m.model.predict(X) for m in self.members])

    def predict(self, X) -> np.ndarray:
        return combine_predict(self, X)

    def support(self, X) -> np.ndarray:
        """Weight-averaged member supports (plain mean if all weights are zero)."""
        if not self.members:
            raise StateError("cannot compute support of an empty pool")
        w = self.weights
        if w.sum() <= 0.0:
            w = np.ones_like(w)
        total = sum(wi * m.model.support(X) for wi, m in zip(w, self.members))
        return total / w.sum()

    def normalize(self) -> None:
        total = float(self.weights.sum())
        if total <= 0.0:
            raise StateError("cannot normalize a pool whose weights sum to zero")
        for m in self.members:
            m.weight = m.weight / total


def weighted_vote(predictions: np.ndarray, weights: np.ndarray, n_classes: int) -> np.ndarray:
    """Class maximizing the summed weight of members voting for it; ties go to the lower class."""
    predictions = np.asarray(predictions, dtype=np.int64)
    n = predictions.shape[1]
    scores = np.zeros((n, n_classes))
    rows = np.arange(n)
    for votes, w in zip(predictions, weights):
        scores[rows, votes] += w
    return np.argmax(scores, axis=1)


def combine_predict(pool: EnsemblePool, features) -> np.ndarray:
    if not pool.members:
        raise StateError("cannot predict with an empty pool")
    X = np.asarray(features, dtype=np.float64)
    return weighted_vote(pool.member_predictions(X), pool.weights, pool.n_classes)


def _threshold(w: float, theta: float) -> float:
    return 0.0 if w < theta else w


def weight_same(pool_size: int) -> float:
    return 1.0 / pool_size


def weight_kuncheva(accuracy: float) -> float:
    if accuracy >= 1.0 - 1e-6:
        return KUNCHEVA_CAP
    return accuracy / (1.0 - accuracy)


def weight_proportional(accuracy: float, ensemble_accuracy: float) -> float:
    if ensemble_accuracy <= 0.0:
        return 0.0
    return accuracy / ensemble_accuracy


def weight_bell(accuracy: float, ensemble_accuracy: float) -> float:
    """Standard normal kernel of the gap between ensemble and member accuracy."""
    return _BELL_NORM * math.exp(-((ensemble_accuracy - accuracy) ** 2) / 2.0)


def compute_weights(
    pool: EnsemblePool,
    chunk: DataChunk,
    method: Weighting,
    theta: float = 0.0,
    predictions: np.ndarray | None = None,
) -> None:
    """Recompute member weights from their accuracy on the labeled ``chunk``.

    Ensemble accuracy uses the weights the pool holds on entry.
    """
    if not pool.members:
        raise StateError("cannot weight an empty pool")
    if method not in WEIGHTINGS:
        raise ConfigurationError("weighting", f"unknown weighting {method!r}")
    if chunk.y is None or chunk.n_instances == 0:
        warnings.warn(f"chunk {chunk.index} has no labeled instances; weights left unchanged", stacklevel=2)
        return
    if predictions is None:
        predictions = pool.member_predictions(chunk.X)
    correct = predictions == chunk.y[None, :]
    accuracies = correct.mean(axis=1)
    ensemble_acc = float((weighted_vote(predictions, pool.weights, pool.n_classes) == chunk.y).mean())

    for member, acc in zip(pool.members, accuracies):
        acc = float(acc)
        member.accuracy = acc
        if method == "same":
            member.weight = weight_same(len(pool))
        elif method == "kuncheva":
            member.weight = weight_kuncheva(acc)
        elif method == "proportional":
            member.weight = _threshold(weight_proportional(acc, ensemble_acc), theta)
        else:
            member.weight = _threshold(weight_bell(acc, ensemble_acc), theta)


def aged_weight(
    method: Aging,
    weight: float,
    accuracy: float,
    residence: int,
    theta: float,
    delta: float,
    xi: float,
) -> float:
    if method == "proportional":
        return accuracy / math.sqrt(max(residence, 1))
    if method == "constant":
        return _threshold(weight - delta, theta)
    if method == "gaussian":
        return _threshold(weight * math.exp(-residence * xi / 2.0), theta)
    raise ConfigurationError("aging", f"unknown aging {method!r}")


def apply_aging(
    pool: EnsemblePool,
    method: Aging,
    theta: float = 0.0,
    delta: float = 0.1,
    xi: float = 0.5,
) -> None:
    for m in pool.members:
        m.weight = aged_weight(method, m.weight, m.accuracy, m.residence, theta, delta, xi)


def rejuvenate(pool: EnsemblePool, r_p: float) -> None:
    """Shorten the residence of members weighted strictly above the pool mean."""
    if not pool.members:
        return
    mean = float(pool.weights.sum()) / len(pool)
    for m in pool.members:
        if m.weight > mean:
            m.residence = max(0, m.residence - max(1, int(math.floor(r_p * m.weight))))


def generalized_diversity_from_correctness(correct: np.ndarray) -> float:
    """Generalized diversity of a (members x instances) correctness table."""
    correct = np.asarray(correct, dtype=bool)
    N, n = correct.shape
    if N < 2:
        raise DiversityUndefinedError(f"generalized diversity needs >= 2 members, got {N}")
    failures = N - correct.sum(axis=0)
    p = np.bincount(failures, minlength=N + 1) / n
    i = np.arange(N + 1, dtype=np.float64)
    p1 = float(np.sum(i / N * p))
    if p1 == 0.0:
        return 1.0
    p2 = float(np.sum(i * (i - 1.0) / (N * (N - 1.0)) * p))
    return 1.0 - p2 / p1


def generalized_diversity(pool: EnsemblePool, chunk: DataChunk) -> float:
    if len(pool) < 2:
        raise DiversityUndefinedError(f"generalized diversity needs >= 2 members, got {len(pool)}")
    if chunk.y is None or chunk.n_instances == 0:
        raise StateError(f"chunk {chunk.index} has no labeled instances")
    return generalized_diversity_from_correctness(pool.member_predictions(chunk.X) == chunk.y[None, :])


def pruning_scores(
    predictions: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    n_classes: int,
    mode: Literal["pre", "post"],
    alpha: float = 0.5,
) -> np.ndarray:
    """Score of every leave-one-out subset; entry j scores the pool without member j."""
    N = predictions.shape[0]
    correct = predictions == y[None, :]
    scores = np.empty(N)
    for j in range(N):
        keep = np.arange(N) != j
        diversity = generalized_diversity_from_correctness(correct[keep]) if N - 1 >= 2 else 0.0
        if mode == "pre":
            scores[j] = diversity
        else:
            acc = float((weighted_vote(predictions[keep], weights[keep], n_classes) == y).mean())
            scores[j] = alpha * acc + (1.0 - alpha) * diversity
    return scores


def choose_removal(scores: np.ndarray, residences: np.ndarray) -> int:
    """Member whose removal leaves the best subset; ties remove the oldest, then the lowest index."""
    best = scores.max()
    tied = np.flatnonzero(scores >= best - TIE_TOLERANCE)
    oldest = residences[tied].max()
    return int(tied[residences[tied] == oldest][0])


def prune(
    pool: EnsemblePool,
    chunk: DataChunk,
    mode: Literal["pre", "post"],
    alpha: float = 0.5,
    predictions: np.ndarray | None = None,
) -> int:
    """Drop the one member of an over-full pool whose removal scores best.

    Returns the removed member's former position.
    """
    if len(pool) != pool.capacity + 1:
        raise StateError(f"pruning needs exactly L+1={pool.capacity + 1} members, pool has {len(pool)}")
    if mode not in ("pre", "post"):
        raise ConfigurationError("mode", f"pruning mode must be 'pre' or 'post', got {mode!r}")
    if chunk.y is None or chunk.n_instances == 0:
        raise StateError(f"chunk {chunk.index} has no labeled instances to prune with")
    if predictions is None:
        predictions = pool.member_predictions(chunk.X)
    scores = pruning_scores(predictions, chunk.y, pool.weights, pool.n_classes, mode, alpha)
    removed = choose_removal(scores, pool.residences)
    del pool.members[removed]
    return removed


@dataclass
class AwaeConfig:
    """AWAE hyperparameters.

    Defaults: theta 5%, bell weighting, constant aging, pool of 10, post
    pruning only. ``delta`` and ``xi`` only matter for constant and gaussian
    aging respectively.
    """

    capacity: int = 10
    pre_pruning: bool = False
    post_pruning: bool = True
    weighting: Weighting = "bell"
    aging: Aging = "constant"
    theta: float = 0.05
    delta: float = 0.1
    xi: float = 0.5
    r_p: float = 2.0
    alpha: float = 0.5
    rejuvenation_enabled: bool = False

    def validate(self) -> "AwaeConfig":
        if int(self.capacity) < 1:
            raise ConfigurationError("capacity", "must be a positive integer")
        if self.weighting not in WEIGHTINGS:
            raise ConfigurationError("weighting", f"must be one of {WEIGHTINGS}, got {self.weighting!r}")
        if self.aging not in AGINGS:
            raise ConfigurationError("aging", f"must be one of {AGINGS}, got {self.aging!r}")
        for name in ("theta", "alpha"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(name, "must lie in [0, 1]")
        if self.delta < 0:
            raise ConfigurationError("delta", "must be non-negative")
        if self.xi <= 0:
            raise ConfigurationError("xi", "must be positive")
        if self.r_p <= 1:
            raise ConfigurationError("r_p", "must be greater than 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def process_chunk(
    pool: EnsemblePool,
    chunk: DataChunk,
    labeled_subset: DataChunk,
    config: AwaeConfig,
    learner: LearnerConfig | None = None,
    learner_kind: str = "gnb",
) -> None:
    """Run one iteration of the AWAE loop on the labeled part of ``chunk``."""
    learner = learner or LearnerConfig()
    model = learners.fit(learner_kind, labeled_subset, learner)
    initial = float(pool.weights.mean()) if pool.members else 1.0
    newest = ClassifierMember(model, weight=initial, residence=0, birth_chunk=chunk.index)
    pool.members.append(newest)

    predictions = pool.member_predictions(labeled_subset.X)
    if config.pre_pruning and len(pool) > config.capacity:
        removed = prune(pool, labeled_subset, "pre", predictions=predictions)
        predictions = np.delete(predictions, removed, axis=0)

    compute_weights(pool, labeled_subset, config.weighting, config.theta, predictions=predictions)
    if config.rejuvenation_enabled:
        rejuvenate(pool, config.r_p)
    apply_aging(pool, config.aging, config.theta, config.delta, config.xi)

    alive = [m.weight > 0.0 for m in pool.members]
    if not any(alive):
        keep = newest if newest in pool.members else max(pool.members, key=lambda m: m.birth_chunk)
        keep.weight = 1.0
        pool.members = [keep]
        predictions = None
    else:
        pool.members = [m for m, a in zip(pool.members, alive) if a]
        predictions = predictions[np.asarray(alive)]

    if config.post_pruning and len(pool) > config.capacity:
        prune(pool, labeled_subset, "post", config.alpha, predictions=predictions)

    pool.normalize()
    for m in pool.members:
        m.residence += 1


class ChunkEnsemble:
    """Shared surface of chunk-based ensembles driven by the evaluation loop."""

    method = ""

    def __init__(self, capacity: int, learner_kind: str = "gnb", learner_config: LearnerConfig | None = None,
                 n_classes: int = 2):
        self.learner_kind = learners.normalize_kind(learner_kind)
        self.learner_config = learner_config or LearnerConfig()
        self.pool = EnsemblePool(capacity, n_classes)

    @property
    def pool_size(self) -> int:
        return len(self.pool)

    @property
    def fitted(self) -> bool:
        return bool(self.pool.members)

    def predict(self, X) -> np.ndarray:
        return self.pool.predict(X)

    def support(self, X) -> np.ndarray:
        return self.pool.support(X)

    def process(self, chunk: DataChunk, labeled: DataChunk) -> None:
        raise NotImplementedError

    def params(self) -> dict:
        """JSON-serializable hyperparameters (stored in snapshots)."""
        return {}


class AWAE(ChunkEnsemble):
    method = "awae"

    def __init__(self, config: AwaeConfig | None = None, learner_kind: str = "gnb",
                 learner_config: LearnerConfig | None = None, n_classes: int = 2):
        self.config = (config or AwaeConfig()).validate()
        super().__init__(self.config.capacity, learner_kind, learner_config, n_classes)

    def process(self, chunk: DataChunk, labeled: DataChunk) -> None:
        self.pool.n_classes = chunk.n_classes
        process_chunk(self.pool, chunk, labeled, self.config, self.learner_config, self.learner_kind)

    def params(self) -> dict:
        return self.config.to_dict()
