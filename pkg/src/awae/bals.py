"""Budget Active Labeling Strategy: uncertainty-threshold selection plus a random budget."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from awae.errors import ConfigurationError, StateError, StreamError, UnsupportedTaskError
from awae.stream import DataChunk


@dataclass
class BalsConfig:
    """``threshold`` bounds the support distance from 0.5; ``budget`` is the random fraction labeled."""

    threshold: float = 0.2
    budget: float = 0.05
    seed: int = 0

    def validate(self) -> "BalsConfig":
        if not 0.0 <= self.threshold <= 0.5:
            raise ConfigurationError("threshold", f"must lie in [0, 0.5], got {self.threshold!r}")
        if not 0.0 <= self.budget <= 1.0:
            raise ConfigurationError("budget", f"must lie in [0, 1], got {self.budget!r}")
        return self


@dataclass
class LabelingOutcome:
    selected_indices: np.ndarray
    labeled_chunk: DataChunk
    labeled_fraction: float
    active_count: int = 0
    budget_count: int = 0
    overlap: int = 0


def budget_size(budget: float, n: int) -> int:
    # round first so e.g. 0.2 * 5 does not ceil to 2 through float error
    return min(n, math.ceil(round(budget * n, 9)))


def boundary_distance(predictor, X: np.ndarray) -> np.ndarray:
    """Distance |support(class 1) - 0.5| of each instance from the binary decision boundary."""
    return np.abs(predictor.support(X)[:, 1] - 0.5)


def full_labeling(chunk: DataChunk) -> LabelingOutcome:
    if chunk.y is None:
        raise StreamError(f"chunk {chunk.index} carries no ground truth to reveal")
    idx = np.arange(chunk.n_instances)
    return LabelingOutcome(idx, chunk, 1.0, active_count=0, budget_count=chunk.n_instances, overlap=0)


def select_for_labeling(predictor, chunk: DataChunk, config: BalsConfig, is_first_chunk: bool) -> LabelingOutcome:
    """Pick the instances of ``chunk`` whose labels are revealed.

    ``predictor`` is anything exposing ``support(X)``: an ensemble (weighted
    member support) or a single model. The first chunk is labeled in full.
    The budget sample is drawn from a generator seeded by
    ``(config.seed, chunk.index)``, so selection does not depend on history.
    """
    config.validate()
    if chunk.n_classes != 2:
        raise UnsupportedTaskError(f"active labeling supports binary streams only, got {chunk.n_classes} classes")
    if chunk.n_instances == 0:
        raise StreamError(f"chunk {chunk.index} is empty")
    if is_first_chunk:
        return full_labeling(chunk)
    if predictor is None:
        raise StateError("a predictor is required to select labels after the first chunk")
    if chunk.y is None:
        raise StreamError(f"chunk {chunk.index} carries no ground truth to reveal")

    n = chunk.n_instances
    active = np.flatnonzero(boundary_distance(predictor, chunk.X) < config.threshold)
    rng = np.random.default_rng([int(config.seed), int(chunk.index)])
    budget = rng.choice(n, size=budget_size(config.budget, n), replace=False)
    selected = np.union1d(active, budget).astype(np.int64)
    return LabelingOutcome(
        selected_indices=selected,
        labeled_chunk=chunk.subset(selected),
        labeled_fraction=selected.size / n,
        active_count=int(active.size),
        budget_count=int(budget.size),
        overlap=int(np.intersect1d(active, budget).size),
    )
