"""Exception types shared across the package."""

from __future__ import annotations


class AutodqError(Exception):
    """Base class for all package errors."""


class NoDataError(AutodqError):
    """A value-based statistic was requested on a column with no usable cells."""


class MetricDtypeError(AutodqError):
    """Metric is not defined for the column's dtype."""


class UnknownMetricError(AutodqError):
    """Metric name not present in the catalog."""


class SeriesTooShortError(AutodqError):
    """Series too short for the requested operation."""


class NonFiniteSeriesError(AutodqError):
    """Series contains NaN or infinite values."""


class NonPositiveLogError(AutodqError):
    """A log-transformed metric received a non-positive value.

    Raised at validation time; callers treat it as a data-quality
    violation, not as an internal failure.
    """


class InapplicableIssueError(AutodqError):
    """Synthetic issue type does not apply to the column's dtype."""


class MissingDonorError(AutodqError):
    """Schema-change injection requires a donor column of the same dtype."""


class DtypeMismatchError(AutodqError):
    """Two snapshots (or a program and a batch) disagree on dtype."""


class ContractViolationError(AutodqError):
    """Caller violated an API precondition (e.g. advancing a rejected batch)."""


class ProgramFormatError(AutodqError):
    """Serialized program is malformed, truncated, or version-incompatible."""


class IngestError(AutodqError):
    """Snapshot directory or schema could not be ingested."""
