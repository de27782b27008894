"""Active Weighted Aging Ensemble for concept-drifting data streams."""

from awae.bals import BalsConfig, LabelingOutcome, select_for_labeling
from awae.ensemble import AWAE, AwaeConfig, ClassifierMember, EnsemblePool, combine_predict, process_chunk
from awae.evaluation import (
    ComparisonResult,
    EvaluationRecord,
    balanced_accuracy,
    cumulative_mean_curve,
    paired_t_test,
    run_test_then_train,
)
from awae.learners import LearnerConfig
from awae.reference import AUELite, AWELite, SEA, make_reference
from awae.stream import (
    DataChunk,
    StreamConfig,
    generate_semisynthetic_stream,
    generate_synthetic_stream,
    read_csv_stream,
    write_csv_stream,
)

__version__ = "0.1.0"

__all__ = [
    "AWAE",
    "AUELite",
    "AWELite",
    "AwaeConfig",
    "BalsConfig",
    "ClassifierMember",
    "ComparisonResult",
    "DataChunk",
    "EnsemblePool",
    "EvaluationRecord",
    "LabelingOutcome",
    "LearnerConfig",
    "SEA",
    "StreamConfig",
    "balanced_accuracy",
    "combine_predict",
    "cumulative_mean_curve",
    "generate_semisynthetic_stream",
    "generate_synthetic_stream",
    "make_reference",
    "paired_t_test",
    "process_chunk",
    "read_csv_stream",
    "run_test_then_train",
    "select_for_labeling",
    "write_csv_stream",
]
