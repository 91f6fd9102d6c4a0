"""Auto-programmed data-quality validation for recurring pipeline columns.

Fits conjunctive threshold programs over statistical column metrics from
historical snapshots, with worst-case expected false-positive-rate
bounds, and checks newly arriving batches against them.
"""

from .column import ColumnSnapshot, Dtype
from .constraints import (
    BoundKind,
    DqConstraint,
    bound_kind_for,
    construct_constraints,
    estimate_moments,
    evaluate_constraint,
    fpr_bound,
)
from .errors import (
    AutodqError,
    ContractViolationError,
    DtypeMismatchError,
    InapplicableIssueError,
    IngestError,
    MetricDtypeError,
    MissingDonorError,
    NoDataError,
    NonFiniteSeriesError,
    NonPositiveLogError,
    ProgramFormatError,
    SeriesTooShortError,
    UnknownMetricError,
)
from .metrics import (
    Arity,
    CategoryHistogram,
    MetricId,
    compute_single,
    compute_two,
    generate_pattern,
    metric,
    metrics_for,
    pattern_histogram,
)
from .runner import (
    ConstraintRecord,
    ValidationReport,
    Verdict,
    advance,
    check,
    deserialize,
    fit,
    fit_many,
    serialize,
)
from .stationarity import (
    MetricSeries,
    TransformKind,
    TransformSpec,
    adf_test,
    lag_transform,
    make_stationary,
    transform_new_point,
)
from .synthesis import (
    DqIssueSpec,
    DqProgram,
    IssueType,
    VariantCorpus,
    build_corpus,
    greedy_select,
    inject,
    recall_set,
)

__version__ = "0.1.0"

__all__ = [
    "Arity",
    "AutodqError",
    "BoundKind",
    "CategoryHistogram",
    "ColumnSnapshot",
    "ConstraintRecord",
    "ContractViolationError",
    "DqConstraint",
    "DqIssueSpec",
    "DqProgram",
    "Dtype",
    "DtypeMismatchError",
    "InapplicableIssueError",
    "IngestError",
    "IssueType",
    "MetricDtypeError",
    "MetricId",
    "MetricSeries",
    "MissingDonorError",
    "NoDataError",
    "NonFiniteSeriesError",
    "NonPositiveLogError",
    "ProgramFormatError",
    "SeriesTooShortError",
    "TransformKind",
    "TransformSpec",
    "UnknownMetricError",
    "ValidationReport",
    "VariantCorpus",
    "Verdict",
    "adf_test",
    "advance",
    "bound_kind_for",
    "build_corpus",
    "check",
    "compute_single",
    "compute_two",
    "construct_constraints",
    "deserialize",
    "estimate_moments",
    "evaluate_constraint",
    "fit",
    "fit_many",
    "fpr_bound",
    "generate_pattern",
    "greedy_select",
    "inject",
    "lag_transform",
    "make_stationary",
    "metric",
    "metrics_for",
    "pattern_histogram",
    "recall_set",
    "serialize",
    "transform_new_point",
]
