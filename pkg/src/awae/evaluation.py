"""Test-then-train evaluation, metrics, paired t-tests and results files."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from awae.bals import BalsConfig, full_labeling, select_for_labeling
from awae.errors import MetricError, StreamError
from awae.stream import DataChunk

SIGNIFICANCE = 0.05
RESULTS_SCHEMA = "# awae-results v1"
COMPARISON_SCHEMA = "# awae-comparisons v1"
RESULTS_COLUMNS = (
    "run_id",
    "method",
    "learner",
    "drift_type",
    "seed",
    "chunk",
    "accuracy",
    "balanced_accuracy",
    "labeled_fraction",
    "pool_size",
    "wall_time_ms",
)


@dataclass
class EvaluationRecord:
    """Metrics for one evaluated chunk plus the labeling telemetry of that chunk."""

    chunk: int
    accuracy: float
    balanced_accuracy: float
    labeled_fraction: float
    pool_size: int
    wall_time_ms: float = 0.0
    active_count: int = 0
    budget_count: int = 0
    overlap: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    records: list[EvaluationRecord] = field(default_factory=list)
    failed_chunk: int | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.failed_chunk is not None


@dataclass
class ComparisonResult:
    method_a: str
    method_b: str
    mean_a: float
    mean_b: float
    t_statistic: float
    p_value: float
    significant: bool
    degenerate: bool = False
    n_pairs: int = 0


def accuracy(truth, predictions) -> float:
    truth = np.asarray(truth)
    predictions = np.asarray(predictions)
    if truth.size == 0:
        raise MetricError("accuracy of an empty sample is undefined")
    if truth.shape != predictions.shape:
        raise MetricError(f"length mismatch: {truth.shape} vs {predictions.shape}")
    return float(np.mean(truth == predictions))


def balanced_accuracy(truth, predictions) -> float:
    """Mean recall over the classes that occur in ``truth``."""
    truth = np.asarray(truth)
    predictions = np.asarray(predictions)
    if truth.size == 0:
        raise MetricError("balanced accuracy of an empty sample is undefined")
    if truth.shape != predictions.shape:
        raise MetricError(f"length mismatch: {truth.shape} vs {predictions.shape}")
    recalls = [np.mean(predictions[truth == c] == c) for c in np.unique(truth)]
    return float(np.mean(recalls))


def run_test_then_train(
    stream: Sequence[DataChunk],
    method,
    labeling: BalsConfig | None = None,
    *,
    start: int = 0,
    records: list[EvaluationRecord] | None = None,
    timing: bool = False,
    on_evaluate: Callable[[int], None] | None = None,
    on_chunk_end: Callable[[int, list[EvaluationRecord]], None] | None = None,
) -> RunResult:
    """Evaluate ``method`` on each chunk before training it on that chunk.

    The first chunk of ``stream`` is used for training only. ``labeling=None``
    reveals every label; otherwise BALS decides which labels the method sees
    (ground truth is always used in full for the metrics). ``start`` and
    ``records`` resume a run whose method state was restored from a snapshot.
    """
    if len(stream) < 2:
        raise StreamError(f"test-then-train needs at least 2 chunks, got {len(stream)}")
    result = RunResult(records=list(records or []))
    for position in range(start, len(stream)):
        chunk = stream[position]
        t0 = time.perf_counter()
        try:
            first = position == 0
            if not first:
                if on_evaluate is not None:
                    on_evaluate(chunk.index)
                predictions = method.predict(chunk.X)
                acc = accuracy(chunk.y, predictions)
                bacc = balanced_accuracy(chunk.y, predictions)
            if labeling is None or first:
                outcome = full_labeling(chunk)
            else:
                outcome = select_for_labeling(method, chunk, labeling, is_first_chunk=False)
            if outcome.labeled_chunk.n_instances > 0:
                method.process(chunk, outcome.labeled_chunk)
        except Exception as exc:  # noqa: BLE001 - a failed run is data, not a crash
            result.failed_chunk = chunk.index
            result.error = f"{type(exc).__name__}: {exc}"
            return result
        if not first:
            elapsed = (time.perf_counter() - t0) * 1000.0 if timing else 0.0
            result.records.append(
                EvaluationRecord(
                    chunk=chunk.index,
                    accuracy=acc,
                    balanced_accuracy=bacc,
                    labeled_fraction=outcome.labeled_fraction,
                    pool_size=method.pool_size,
                    wall_time_ms=elapsed,
                    active_count=outcome.active_count,
                    budget_count=outcome.budget_count,
                    overlap=outcome.overlap,
                )
            )
        if on_chunk_end is not None:
            on_chunk_end(position, result.records)
    return result


def paired_t_test(scores_a, scores_b, method_a: str = "a", method_b: str = "b") -> ComparisonResult:
    """Two-sided paired t-test on ``scores_a - scores_b`` with n-1 degrees of freedom.

    Zero variance of the differences is reported as a degenerate,
    non-significant comparison with p = 1.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise MetricError(f"paired samples must be equal-length 1-D sequences, got {a.shape} and {b.shape}")
    n = a.size
    if n < 3:
        raise MetricError(f"paired t-test needs at least 3 pairs, got {n}")
    diff = a - b
    sd = float(np.std(diff, ddof=1))
    mean_a, mean_b = float(a.mean()), float(b.mean())
    if sd == 0.0 or not math.isfinite(sd):
        return ComparisonResult(method_a, method_b, mean_a, mean_b, math.nan, 1.0, False, True, n)
    t = float(diff.mean() / (sd / math.sqrt(n)))
    p = float(min(1.0, 2.0 * stats.t.sf(abs(t), df=n - 1)))
    return ComparisonResult(method_a, method_b, mean_a, mean_b, t, p, p < SIGNIFICANCE, False, n)


def cumulative_mean_curve(records: Sequence[EvaluationRecord] | Sequence[float]) -> list[tuple[int, float]]:
    """Running mean of accuracy; ``(chunk index, mean over chunks up to it)`` per record."""
    if len(records) == 0:
        raise MetricError("cumulative curve of no records is undefined")
    if isinstance(records[0], EvaluationRecord):
        chunks = [r.chunk for r in records]
        values = np.array([r.accuracy for r in records])
    else:
        values = np.asarray(records, dtype=np.float64)
        chunks = list(range(1, values.size + 1))
    running = np.cumsum(values) / np.arange(1, values.size + 1)
    return list(zip(chunks, running.tolist()))


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(rows: Iterable[dict], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(RESULTS_SCHEMA + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_COLUMNS)
        for row in rows:
            writer.writerow([_format(row[c]) for c in RESULTS_COLUMNS])


def read_results(path: str | Path) -> list[dict]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines)
    missing = set(RESULTS_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise StreamError(f"{path}: missing result columns {sorted(missing)}")
    rows = []
    for raw in reader:
        row = dict(raw)
        for key in ("seed", "chunk", "pool_size"):
            row[key] = int(row[key])
        for key in ("accuracy", "balanced_accuracy", "labeled_fraction", "wall_time_ms"):
            row[key] = float(row[key])
        rows.append(row)
    return rows


def write_comparisons(results: Iterable[ComparisonResult], path: str | Path, extra: Sequence[dict] | None = None) -> None:
    results = list(results)
    names = [f.name for f in fields(ComparisonResult)]
    extra_keys = sorted(extra[0]) if extra else []
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(COMPARISON_SCHEMA + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(extra_keys + names)
        for i, r in enumerate(results):
            head = [extra[i][k] for k in extra_keys] if extra else []
            writer.writerow(head + [_format(getattr(r, n)) for n in names])
