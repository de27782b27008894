"""Chunked data streams: synthetic and semi-synthetic drift generators and CSV I/O.

A stream is simply a list of :class:`DataChunk` objects in arrival order.
Every generator is a pure function of its configuration and seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from awae.errors import ConfigurationError, ParseError, StreamError

DriftType = Literal["sudden", "gradual", "incremental"]
DRIFT_TYPES = ("sudden", "gradual", "incremental")


@dataclass
class DataChunk:
    """One batch of instances.

    Attributes:
        index: ordinal of the chunk in its stream.
        X: feature matrix of shape (n_instances, n_features).
        y: class indices in ``0..n_classes-1`` or ``None`` when unlabeled.
        n_classes: number of classes M of the stream the chunk belongs to.
    """

    index: int
    X: np.ndarray
    y: np.ndarray | None = None
    n_classes: int = 2

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise StreamError(f"chunk {self.index}: features must be 2-D, got {self.X.ndim}-D")
        if self.index < 0:
            raise StreamError(f"chunk index must be non-negative, got {self.index}")
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=np.int64)
            if self.y.shape != (self.X.shape[0],):
                raise StreamError(
                    f"chunk {self.index}: {self.y.shape[0]} labels for {self.X.shape[0]} instances"
                )
            if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
                raise StreamError(f"chunk {self.index}: label outside 0..{self.n_classes - 1}")

    @property
    def n_instances(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def labeled(self) -> bool:
        return self.y is not None

    def subset(self, indices: Sequence[int] | np.ndarray) -> "DataChunk":
        """Rows ``indices`` of this chunk (labels included when present)."""
        idx = np.asarray(indices, dtype=np.int64)
        return DataChunk(
            index=self.index,
            X=self.X[idx],
            y=None if self.y is None else self.y[idx],
            n_classes=self.n_classes,
        )

    def without_labels(self) -> "DataChunk":
        return DataChunk(self.index, self.X, None, self.n_classes)


@dataclass
class StreamConfig:
    """Parameters of a generated stream (defaults follow the experimental setup)."""

    n_chunks: int = 200
    chunk_size: int = 250
    n_features: int = 8
    n_drifts: int = 10
    drift_type: DriftType = "sudden"
    label_noise: float = 0.01
    n_classes: int = 2
    seed: int = 0

    def validate(self) -> "StreamConfig":
        for name in ("n_chunks", "chunk_size", "n_features"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigurationError(name, f"must be a positive integer, got {value!r}")
        if not isinstance(self.n_drifts, (int, np.integer)) or self.n_drifts < 0:
            raise ConfigurationError("n_drifts", f"must be a non-negative integer, got {self.n_drifts!r}")
        if self.n_drifts >= self.n_chunks:
            raise ConfigurationError("n_drifts", f"must be below n_chunks ({self.n_chunks})")
        if self.drift_type not in DRIFT_TYPES:
            raise ConfigurationError("drift_type", f"must be one of {DRIFT_TYPES}, got {self.drift_type!r}")
        if not 0.0 <= self.label_noise <= 1.0:
            raise ConfigurationError("label_noise", f"must lie in [0, 1], got {self.label_noise!r}")
        if not isinstance(self.n_classes, (int, np.integer)) or self.n_classes < 2:
            raise ConfigurationError("n_classes", f"must be an integer >= 2, got {self.n_classes!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed", f"must be a 64-bit unsigned integer, got {self.seed!r}")
        return self


@dataclass
class ConceptPair:
    """Two Gaussian class-conditional concepts and the blend between them.

    ``means_a``/``means_b`` have shape (n_classes, n_features); both concepts
    use unit covariance scaled by ``scale``.
    """

    means_a: np.ndarray
    means_b: np.ndarray
    blend: float = 0.0
    scale: float = 1.0


def drift_points(n_chunks: int, n_drifts: int) -> list[int]:
    """Chunk indices at which each concept transition is centred."""
    return [(i + 1) * n_chunks // (n_drifts + 1) for i in range(n_drifts)]


def transition_width(n_chunks: int, n_drifts: int) -> int:
    """Width in chunks of a gradual/incremental transition window."""
    if n_drifts == 0:
        return 0
    return math.ceil(n_chunks / (2 * n_drifts))


def concept_positions(config: StreamConfig) -> np.ndarray:
    """Continuous concept position for every chunk.

    The integer part selects the pair ``(concept j, concept j+1)`` and the
    fractional part is the blend coefficient toward concept ``j+1``.  Integer
    values mean a chunk comes purely from one concept.
    """
    k = np.arange(config.n_chunks, dtype=np.float64)
    pos = np.zeros(config.n_chunks)
    width = transition_width(config.n_chunks, config.n_drifts)
    for p in drift_points(config.n_chunks, config.n_drifts):
        if config.drift_type == "sudden":
            pos += (k >= p).astype(np.float64)
        else:
            start = p - width // 2
            pos += np.clip((k - start + 0.5) / width, 0.0, 1.0)
    return pos


def concept_pair_at(means: np.ndarray, position: float) -> ConceptPair:
    lo = min(int(math.floor(position)), means.shape[0] - 1)
    hi = min(lo + 1, means.shape[0] - 1)
    return ConceptPair(means[lo], means[hi], blend=float(position - lo))


def _balanced_labels(n: int, n_classes: int, rng: np.random.Generator) -> np.ndarray:
    y = np.arange(n, dtype=np.int64) % n_classes
    rng.shuffle(y)
    return y


def inject_label_noise(y: np.ndarray, n_classes: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each label with probability ``rate`` to a uniformly chosen other class."""
    y = y.copy()
    flip = rng.random(y.shape[0]) < rate
    shift = rng.integers(1, n_classes, size=int(flip.sum()))
    y[flip] = (y[flip] + shift) % n_classes
    return y


def generate_synthetic_stream(config: StreamConfig) -> list[DataChunk]:
    """Gaussian-cluster stream with ``n_drifts`` concept transitions.

    Each concept places one unit-covariance cluster per class at a mean drawn
    uniformly from [-3, 3]^d. Consecutive concepts are independent draws.
    """
    config.validate()
    M, d, n = config.n_classes, config.n_features, config.chunk_size
    concept_seq, *chunk_seqs = np.random.SeedSequence(config.seed).spawn(config.n_chunks + 1)
    means = np.random.default_rng(concept_seq).uniform(-3.0, 3.0, size=(config.n_drifts + 1, M, d))
    positions = concept_positions(config)

    chunks = []
    for k, seq in enumerate(chunk_seqs):
        rng = np.random.default_rng(seq)
        pair = concept_pair_at(means, positions[k])
        y = _balanced_labels(n, M, rng)
        if config.drift_type == "gradual":
            from_b = rng.random(n) < pair.blend
            centers = np.where(from_b[:, None], pair.means_b[y], pair.means_a[y])
        else:
            # sudden positions are integral, so the blend is 0 there
            centers = (1.0 - pair.blend) * pair.means_a[y] + pair.blend * pair.means_b[y]
        X = centers + pair.scale * rng.standard_normal((n, d))
        y = inject_label_noise(y, M, config.label_noise, rng)
        chunks.append(DataChunk(k, X, y, M))
    return chunks


def projection_anchor_positions(n_chunks: int, n_drifts: int) -> np.ndarray:
    """Chunk positions of the ``n_drifts + 1`` projection anchors."""
    if n_drifts == 0:
        return np.zeros(1)
    return np.linspace(0.0, n_chunks - 1, n_drifts + 1)


def random_projections(n_source: int, n_target: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Gaussian projection matrices with unit-length columns, shape (count, n_source, n_target)."""
    mats = rng.standard_normal((count, n_source, n_target))
    return mats / np.linalg.norm(mats, axis=1, keepdims=True)


def interpolate_projections(
    anchors: np.ndarray, n_chunks: int, interpolation: Literal["nearest", "cubic"]
) -> np.ndarray:
    """Per-chunk projection matrices, shape (n_chunks, n_source, n_target)."""
    n_anchors = anchors.shape[0]
    if n_anchors == 1:
        return np.repeat(anchors, n_chunks, axis=0)
    pos = projection_anchor_positions(n_chunks, n_anchors - 1)
    k = np.arange(n_chunks, dtype=np.float64)
    if interpolation == "nearest":
        nearest = np.abs(k[:, None] - pos[None, :]).argmin(axis=1)
        return anchors[nearest]
    if interpolation == "cubic":
        spline = CubicSpline(pos, anchors, axis=0)
        return spline(np.clip(k, pos[0], pos[-1]))
    raise ConfigurationError("interpolation", f"must be 'nearest' or 'cubic', got {interpolation!r}")


def generate_semisynthetic_stream(
    dataset: DataChunk,
    config: StreamConfig,
    interpolation: Literal["nearest", "cubic"] = "nearest",
) -> list[DataChunk]:
    """Drifting stream built from a static labeled dataset.

    The dataset is standardized, then projected into ``config.n_features``
    dimensions by a matrix interpolated over time between ``n_drifts + 1``
    random anchors. Nearest-anchor interpolation gives sudden drifts, cubic
    interpolation gives incremental ones. Each chunk samples instances with
    replacement and min-max scales the projection per feature over the whole
    dataset.
    """
    config.validate()
    if dataset.y is None:
        raise StreamError("semi-synthetic generation needs a labeled dataset")
    if config.n_features > dataset.n_features:
        raise ConfigurationError(
            "n_features", f"{config.n_features} exceeds the dataset's {dataset.n_features} features"
        )
    if interpolation not in ("nearest", "cubic"):
        raise ConfigurationError("interpolation", f"must be 'nearest' or 'cubic', got {interpolation!r}")

    X = dataset.X
    std = X.std(axis=0)
    X = (X - X.mean(axis=0)) / np.where(std > 0, std, 1.0)
    proj_seq, *chunk_seqs = np.random.SeedSequence(config.seed).spawn(config.n_chunks + 1)
    anchors = random_projections(X.shape[1], config.n_features, config.n_drifts + 1, np.random.default_rng(proj_seq))
    schedule = interpolate_projections(anchors, config.n_chunks, interpolation)

    chunks = []
    for k, seq in enumerate(chunk_seqs):
        rng = np.random.default_rng(seq)
        Z = X @ schedule[k]
        lo, hi = Z.min(axis=0), Z.max(axis=0)
        Z = (Z - lo) / np.where(hi > lo, hi - lo, 1.0)
        idx = rng.integers(0, X.shape[0], size=config.chunk_size)
        y = inject_label_noise(dataset.y[idx], dataset.n_classes, config.label_noise, rng)
        chunks.append(DataChunk(k, Z[idx], y, dataset.n_classes))
    return chunks


def _parse_labels(tokens: list[str]) -> tuple[np.ndarray, int]:
    # Integer labels already forming 0..M-1 are kept verbatim so files written
    # by write_csv_stream round-trip exactly; anything else is densified by
    # first appearance.
    try:
        ints = [int(t) for t in tokens]
    except ValueError:
        ints = None
    if ints is not None and set(ints) == set(range(len(set(ints)))):
        return np.asarray(ints, dtype=np.int64), len(set(ints))
    mapping: dict[str, int] = {}
    for t in tokens:
        mapping.setdefault(t, len(mapping))
    return np.asarray([mapping[t] for t in tokens], dtype=np.int64), len(mapping)


def read_csv_stream(path: str | Path, chunk_size: int) -> list[DataChunk]:
    """Read a labeled CSV (header row, label in the last column) as fixed-size chunks.

    A trailing partial chunk is dropped.
    """
    if chunk_size < 1:
        raise ConfigurationError("chunk_size", f"must be a positive integer, got {chunk_size!r}")
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise StreamError(f"{path}: empty file")
            width = len(header)
            rows, labels = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != width:
                    raise ParseError(f"{path}: expected {width} cells, got {len(row)}", row=lineno)
                try:
                    values = [float(cell) for cell in row[:-1]]
                except ValueError as exc:
                    raise ParseError(f"{path}: non-numeric feature ({exc})", row=lineno) from None
                if not all(math.isfinite(v) for v in values):
                    raise ParseError(f"{path}: non-finite feature value", row=lineno)
                rows.append(values)
                labels.append(row[-1].strip())
    except OSError as exc:
        raise StreamError(f"{path}: {exc.strerror or exc}") from exc

    y, n_classes = _parse_labels(labels)
    if n_classes < 2:
        raise StreamError(f"{path}: need at least 2 distinct labels, found {n_classes}")
    X = np.asarray(rows, dtype=np.float64).reshape(len(rows), width - 1)
    n_full = len(rows) // chunk_size
    return [
        DataChunk(k, X[k * chunk_size:(k + 1) * chunk_size], y[k * chunk_size:(k + 1) * chunk_size], n_classes)
        for k in range(n_full)
    ]


def write_csv_stream(chunks: Iterable[DataChunk], path: str | Path, n_features: int | None = None) -> None:
    """Write labeled chunks as CSV with header ``f0,...,f{d-1},label``.

    Features are written with ``repr`` so they round-trip exactly.
    ``n_features`` only matters for an empty sequence, where it sizes the header.
    """
    chunks = list(chunks)
    if chunks:
        widths = {c.n_features for c in chunks}
        if len(widths) != 1:
            raise StreamError(f"chunks disagree on feature count: {sorted(widths)}")
        n_features = widths.pop()
        if any(c.y is None for c in chunks):
            raise StreamError("only labeled chunks can be written")
    n_features = n_features or 0
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"f{i}" for i in range(n_features)] + ["label"])
            for chunk in chunks:
                for row, label in zip(chunk.X.tolist(), chunk.y.tolist()):
                    writer.writerow([repr(v) for v in row] + [label])
    except OSError as exc:
        raise StreamError(f"{path}: {exc.strerror or exc}") from exc


def stream_from_arrays(X: np.ndarray, y: np.ndarray, chunk_size: int, n_classes: int | None = None) -> list[DataChunk]:
    """Cut in-memory arrays into consecutive full chunks."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    M = n_classes if n_classes is not None else max(2, int(y.max()) + 1)
    return [
        DataChunk(k, X[k * chunk_size:(k + 1) * chunk_size], y[k * chunk_size:(k + 1) * chunk_size], M)
        for k in range(X.shape[0] // chunk_size)
    ]


def with_seed(config: StreamConfig, seed: int) -> StreamConfig:
    return replace(config, seed=seed)
