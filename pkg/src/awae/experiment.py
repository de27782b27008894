"""Experiment configuration, the method x learner x drift x seed grid, and resumable runs."""

from __future__ import annotations

import csv
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from awae.bals import BalsConfig
from awae.ensemble import AWAE, AwaeConfig, ChunkEnsemble
from awae.errors import ConfigurationError, StreamError
from awae.evaluation import EvaluationRecord, RunResult, run_test_then_train, write_results
from awae.learners import LearnerConfig, normalize_kind
from awae.reference import REFERENCE_METHODS, make_reference
from awae.snapshot import read_pool, save_pool
from awae.stream import (
    DRIFT_TYPES,
    DataChunk,
    StreamConfig,
    generate_semisynthetic_stream,
    generate_synthetic_stream,
    read_csv_stream,
)

OUTPUT_ROOT_ENV = "AWAE_OUTPUT_ROOT"
METHODS = ("awae",) + tuple(REFERENCE_METHODS)
DISPLAY_NAMES = {
    "awae": "AWAE",
    "sea": "SEA",
    "awe": "AWE-lite",
    "aue": "AUE-lite",
    "static": "static",
    "single": "single",
}
SHORT_LEARNER = {"gnb": "gnb", "hoeffding_tree": "ht", "mlp": "mlp"}
SEMISYNTHETIC_INTERPOLATION = {"sudden": "nearest", "incremental": "cubic"}


@dataclass
class MethodSpec:
    method: str
    name: str
    learners: list[str]
    capacity: int = 10
    params: dict = field(default_factory=dict)

    def build(self, learner: str, learner_config: LearnerConfig, n_classes: int) -> ChunkEnsemble:
        if self.method == "awae":
            config = AwaeConfig(**{"capacity": self.capacity, **self.params})
            return AWAE(config, learner, learner_config, n_classes)
        return make_reference(self.method, self.capacity, learner, learner_config, n_classes)


@dataclass
class StreamSpec:
    kind: str = "synthetic"
    base: StreamConfig = field(default_factory=StreamConfig)
    drift_types: list[str] = field(default_factory=lambda: ["sudden"])
    path: Path | None = None
    name: str = ""

    def build(self, drift_type: str, seed: int) -> list[DataChunk]:
        if self.kind == "synthetic":
            return generate_synthetic_stream(replace(self.base, drift_type=drift_type, seed=seed))
        if self.kind == "csv":
            return read_csv_stream(self.path, self.base.chunk_size)
        (dataset,) = read_csv_stream(self.path, _count_rows(self.path))
        config = replace(self.base, seed=seed, n_classes=dataset.n_classes)
        return generate_semisynthetic_stream(dataset, config, SEMISYNTHETIC_INTERPOLATION[drift_type])


def _count_rows(path: Path) -> int:
    with Path(path).open(encoding="utf-8") as fh:
        return max(1, sum(1 for line in fh if line.strip()) - 1)


@dataclass
class ExperimentConfig:
    stream: StreamSpec
    methods: list[MethodSpec]
    seeds: list[int]
    output: Path
    labeling: BalsConfig | None = None
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    timing: bool = False
    checkpoint_every: int = 10


@dataclass(frozen=True)
class RunSpec:
    run_id: str
    method_index: int
    learner: str
    drift_type: str
    seed: int


def _dataclass_kwargs(cls, raw: dict, section: str) -> dict:
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"{section}.{sorted(unknown)[0]}", "unknown key")
    return dict(raw)


def _require_mapping(value, section: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigurationError(section, "must be a mapping")
    return value


def parse_config(raw: dict, base_dir: Path | None = None, output: Path | None = None) -> ExperimentConfig:
    """Validate a decoded YAML document into an :class:`ExperimentConfig`."""
    base_dir = Path(base_dir or ".")
    raw = _require_mapping(raw, "config")
    allowed = {"stream", "methods", "seeds", "output", "labeling", "learner", "timing", "checkpoint_every"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigurationError(sorted(unknown)[0], "unknown top-level key")

    stream_raw = dict(_require_mapping(raw.get("stream"), "stream"))
    kind = stream_raw.pop("kind", "synthetic")
    if kind not in ("synthetic", "csv", "semisynthetic"):
        raise ConfigurationError("stream.kind", f"must be synthetic, csv or semisynthetic, got {kind!r}")
    path = stream_raw.pop("path", None)
    name = stream_raw.pop("name", None)
    drift = stream_raw.pop("drift_type", "sudden")
    drift_types = list(drift) if isinstance(drift, list) else [drift]
    base = StreamConfig(**_dataclass_kwargs(StreamConfig, stream_raw, "stream"))
    try:
        base.validate()
    except ConfigurationError as exc:
        raise ConfigurationError(f"stream.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    allowed_drifts = DRIFT_TYPES if kind == "synthetic" else tuple(SEMISYNTHETIC_INTERPOLATION)
    if kind != "csv":
        for d in drift_types:
            if d not in allowed_drifts:
                raise ConfigurationError("stream.drift_type", f"{d!r} not in {allowed_drifts}")
    if kind in ("csv", "semisynthetic"):
        if not path:
            raise ConfigurationError("stream.path", f"required for {kind} streams")
        path = Path(path)
        if not path.is_absolute():
            path = base_dir / path
        name = name or path.stem
        if kind == "csv":
            drift_types = [name]
    stream = StreamSpec(kind, base, drift_types, path, name or "synthetic")

    methods_raw = raw.get("methods")
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ConfigurationError("methods", "must be a non-empty list")
    methods = []
    for i, m in enumerate(methods_raw):
        m = dict(_require_mapping(m, f"methods[{i}]"))
        method = m.pop("method", None)
        if method not in METHODS:
            raise ConfigurationError(f"methods[{i}].method", f"must be one of {METHODS}, got {method!r}")
        if "learner" in m and "learners" in m:
            raise ConfigurationError(f"methods[{i}].learners", "give either 'learner' or 'learners', not both")
        learners_raw = m.pop("learners", None) or m.pop("learner", "gnb")
        learner_kinds = []
        for lk in learners_raw if isinstance(learners_raw, list) else [learners_raw]:
            try:
                learner_kinds.append(SHORT_LEARNER[normalize_kind(str(lk))])
            except ConfigurationError:
                raise ConfigurationError(f"methods[{i}].learner", f"unknown learner {lk!r}") from None
        spec = MethodSpec(
            method=method,
            name=str(m.pop("name", DISPLAY_NAMES[method])),
            learners=learner_kinds,
            capacity=int(m.pop("capacity", 10)),
            params=dict(_require_mapping(m.pop("params", None), f"methods[{i}].params")),
        )
        if m:
            raise ConfigurationError(f"methods[{i}].{sorted(m)[0]}", "unknown key")
        if spec.capacity < 1:
            raise ConfigurationError(f"methods[{i}].capacity", "must be a positive integer")
        if method == "awae":
            _dataclass_kwargs(AwaeConfig, spec.params, f"methods[{i}].params")
            try:
                AwaeConfig(**{"capacity": spec.capacity, **spec.params}).validate()
            except ConfigurationError as exc:
                raise ConfigurationError(f"methods[{i}].params.{exc.field}", str(exc).split(": ", 1)[-1]) from None
        elif spec.params:
            raise ConfigurationError(f"methods[{i}].params", f"{method} takes no params")
        methods.append(spec)
    names = [(m.name, lk) for m in methods for lk in m.learners]
    if len(set(names)) != len(names):
        raise ConfigurationError("methods", "method name/learner combinations must be unique")

    seeds = raw.get("seeds", [0])
    if isinstance(seeds, int):
        seeds = [seeds]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and 0 <= s < 2**64 for s in seeds):
        raise ConfigurationError("seeds", "must be a non-empty list of 64-bit unsigned integers")

    labeling_raw = dict(_require_mapping(raw.get("labeling"), "labeling"))
    mode = labeling_raw.pop("mode", "full")
    if mode == "full":
        labeling = None
    elif mode == "bals":
        labeling = BalsConfig(**_dataclass_kwargs(BalsConfig, labeling_raw, "labeling"))
        try:
            labeling.validate()
        except ConfigurationError as exc:
            raise ConfigurationError(f"labeling.{exc.field}", str(exc).split(": ", 1)[-1]) from None
        if stream.kind == "synthetic" and base.n_classes != 2:
            raise ConfigurationError("labeling.mode", "bals requires a binary stream (n_classes: 2)")
    else:
        raise ConfigurationError("labeling.mode", f"must be 'full' or 'bals', got {mode!r}")

    learner = LearnerConfig(**_dataclass_kwargs(LearnerConfig, _require_mapping(raw.get("learner"), "learner"), "learner"))
    try:
        learner.validate()
    except ConfigurationError as exc:
        raise ConfigurationError(f"learner.{exc.field}", str(exc).split(": ", 1)[-1]) from None

    if output is None:
        if raw.get("output"):
            output = Path(raw["output"])
            if not output.is_absolute():
                output = base_dir / output
        else:
            output = Path(os.environ.get(OUTPUT_ROOT_ENV, "results"))
    checkpoint_every = raw.get("checkpoint_every", 10)
    if not isinstance(checkpoint_every, int) or checkpoint_every < 1:
        raise ConfigurationError("checkpoint_every", "must be a positive integer")
    return ExperimentConfig(
        stream=stream,
        methods=methods,
        seeds=list(seeds),
        output=Path(output),
        labeling=labeling,
        learner=learner,
        timing=bool(raw.get("timing", False)),
        checkpoint_every=checkpoint_every,
    )


def _key_line(node, field_path: str) -> int | None:
    """1-based line of the YAML key addressed by a field path such as ``methods[0].learner``.

    Follows the path as far as it resolves and reports the deepest key reached.
    """
    tokens: list[str | int] = []
    for part in field_path.split("."):
        name, *indexes = part.replace("]", "").split("[")
        if name:
            tokens.append(name)
        tokens.extend(int(i) for i in indexes if i.isdigit())
    line = None
    for token in tokens:
        if isinstance(token, int) and isinstance(node, yaml.SequenceNode) and token < len(node.value):
            node = node.value[token]
            line = node.start_mark.line + 1
        elif isinstance(token, str) and isinstance(node, yaml.MappingNode):
            match = next(((k, v) for k, v in node.value if k.value == token), None)
            if match is None:
                break
            line = match[0].start_mark.line + 1
            node = match[1]
        else:
            break
    return line


def load_config(path: str | Path, output: Path | None = None) -> ExperimentConfig:
    """Read a YAML experiment file; configuration errors name the offending line when possible."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError("config", f"{path}: {exc.strerror or exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "unknown line"
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigurationError("config", f"{path}: {where}: {problem}") from None
    try:
        return parse_config(raw, path.parent, output)
    except (ConfigurationError, TypeError) as exc:
        field_name = exc.field if isinstance(exc, ConfigurationError) else "config"
        line = _key_line(yaml.compose(text), field_name) if text.strip() else None
        where = f"line {line}: " if line else ""
        message = str(exc).split(": ", 1)[-1] if isinstance(exc, ConfigurationError) else str(exc)
        raise ConfigurationError(field_name, f"{path}: {where}{message}") from None


def run_grid(config: ExperimentConfig) -> list[RunSpec]:
    runs = []
    for drift in config.stream.drift_types:
        for seed in config.seeds:
            for mi, m in enumerate(config.methods):
                for lk in m.learners:
                    run_id = f"{m.name}-{lk}-{drift}-s{seed}"
                    runs.append(RunSpec(run_id, mi, lk, drift, seed))
    return runs


def _snapshot_path(output: Path, run_id: str) -> Path:
    return output / "snapshots" / f"{run_id}.dfp"


def execute_run(config: ExperimentConfig, spec: RunSpec) -> tuple[list[dict], str | None, int | None]:
    """Run (or resume, or reuse) one grid cell; returns result rows and failure info."""
    method_spec = config.methods[spec.method_index]
    learner_config = replace(config.learner, seed=spec.seed)
    labeling = None if config.labeling is None else replace(config.labeling, seed=spec.seed)
    stream = config.stream.build(spec.drift_type, spec.seed)
    snap = _snapshot_path(config.output, spec.run_id)

    start, records = 0, []
    method = None
    if snap.exists():
        method, extra = read_pool(snap)
        records = [EvaluationRecord(**r) for r in extra.get("records", [])]
        start = int(extra.get("next_position", 0))
        if extra.get("complete"):
            result = RunResult(records=records)
            return _rows(method_spec, spec, result.records), None, None
    if method is None or start == 0:
        method = method_spec.build(spec.learner, learner_config, stream[0].n_classes)
        start, records = 0, []

    def checkpoint(position: int, recs: list[EvaluationRecord]) -> None:
        done = position + 1 == len(stream)
        if done or (position + 1) % config.checkpoint_every == 0:
            extra = {
                "run_id": spec.run_id,
                "next_position": position + 1,
                "complete": done,
                "records": [r.to_dict() for r in recs],
            }
            save_pool(snap, method, extra)

    result = run_test_then_train(
        stream, method, labeling, start=start, records=records, timing=config.timing, on_chunk_end=checkpoint
    )
    return _rows(method_spec, spec, result.records), result.error, result.failed_chunk


def _rows(method_spec: MethodSpec, spec: RunSpec, records: list[EvaluationRecord]) -> list[dict]:
    return [
        {
            "run_id": spec.run_id,
            "method": method_spec.name,
            "learner": spec.learner,
            "drift_type": spec.drift_type,
            "seed": spec.seed,
            "chunk": r.chunk,
            "accuracy": r.accuracy,
            "balanced_accuracy": r.balanced_accuracy,
            "labeled_fraction": r.labeled_fraction,
            "pool_size": r.pool_size,
            "wall_time_ms": r.wall_time_ms,
        }
        for r in records
    ]


def _execute(args):
    config, spec = args
    return execute_run(config, spec)


@dataclass
class ExperimentOutcome:
    results_path: Path
    n_runs: int
    failures: list[tuple[str, int | None, str]]


def run_experiment(config: ExperimentConfig, force: bool = False, workers: int = 1) -> ExperimentOutcome:
    """Execute the whole grid and write ``results.csv`` (plus ``failures.csv`` if any run failed).

    Existing per-run snapshots are resumed; ``force`` discards them and any
    previous results first.
    """
    output = config.output
    results_path = output / "results.csv"
    if results_path.exists() and not force:
        raise FileExistsError(f"{results_path} exists; pass --force to overwrite")
    if force:
        shutil.rmtree(output / "snapshots", ignore_errors=True)
        for name in ("results.csv", "failures.csv", "labeling.csv"):
            (output / name).unlink(missing_ok=True)
    if config.stream.path is not None and not config.stream.path.exists():
        raise StreamError(f"stream file {config.stream.path} does not exist")
    (output / "snapshots").mkdir(parents=True, exist_ok=True)

    grid = run_grid(config)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_execute, [(config, spec) for spec in grid]))
    else:
        outcomes = [execute_run(config, spec) for spec in grid]

    rows, failures = [], []
    for spec, (run_rows, error, failed_chunk) in zip(grid, outcomes):
        rows.extend(run_rows)
        if error is not None:
            failures.append((spec.run_id, failed_chunk, error))
    write_results(rows, results_path)
    if failures:
        with (output / "failures.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["run_id", "chunk", "error"])
            writer.writerows(failures)
    return ExperimentOutcome(results_path, len(grid), failures)


def generate_stream_file(config: ExperimentConfig, out: Path, seed: int | None = None) -> int:
    """Write the first configured stream as CSV; returns the number of data rows."""
    from awae.stream import write_csv_stream

    if config.stream.kind == "csv":
        raise ConfigurationError("stream.kind", "generate needs a synthetic or semisynthetic stream")
    if config.stream.path is not None and not config.stream.path.exists():
        raise StreamError(f"dataset file {config.stream.path} does not exist")
    seed = config.stream.base.seed if seed is None else seed
    chunks = config.stream.build(config.stream.drift_types[0], seed)
    write_csv_stream(chunks, out, config.stream.base.n_features)
    return sum(c.n_instances for c in chunks)
