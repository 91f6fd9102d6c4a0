"""Column snapshots and their cached per-snapshot statistics."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class Dtype(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


# Per-character class map used for pattern profiles and char statistics:
# ASCII digit -> "\d", ASCII letter -> "\l", anything else -> "-".
class _PatternTable(dict):
    def __missing__(self, code: int) -> str:
        return "-"


PATTERN_TABLE = _PatternTable()
for _c in range(ord("0"), ord("9") + 1):
    PATTERN_TABLE[_c] = "\\d"
for _c in list(range(ord("A"), ord("Z") + 1)) + list(range(ord("a"), ord("z") + 1)):
    PATTERN_TABLE[_c] = "\\l"


@dataclass(frozen=True)
class _NumericProfile:
    n_rows: int
    n_nonnull: int
    nonnull: np.ndarray
    sorted_nonnull: np.ndarray
    n_distinct: int
    mean: float
    total: float
    minimum: float
    maximum: float
    median: float


@dataclass(frozen=True)
class _CategoricalProfile:
    n_rows: int
    n_nonnull: int
    counts: Counter
    pattern_counts: Counter
    n_distinct: int
    len_total: int
    letter_total: int
    digit_total: int


class ColumnSnapshot:
    """One execution's values for one column.

    Numeric cells are 64-bit floats with NaN marking nulls. Categorical
    cells are strings; ``None`` and the empty string both count as null.
    Snapshots are immutable by convention; derived statistics are computed
    lazily and cached, so repeated metric evaluation is cheap.
    """

    def __init__(
        self,
        column_id: str,
        dtype: Dtype | str,
        values: Sequence,
        execution_index: int = 0,
    ):
        self.column_id = column_id
        self.dtype = Dtype(dtype)
        if execution_index < 0:
            raise ValueError("execution_index must be non-negative")
        self.execution_index = int(execution_index)
        if self.dtype is Dtype.NUMERIC:
            self.values = _as_float_array(values)
        else:
            cells = list(values)
            for v in cells:
                if v is not None and not isinstance(v, str):
                    raise TypeError(
                        f"categorical cell must be str or None, got {type(v).__name__}"
                    )
            self.values = cells

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return (
            f"ColumnSnapshot({self.column_id!r}, {self.dtype.value}, "
            f"n={len(self.values)}, exec={self.execution_index})"
        )

    @cached_property
    def numeric_profile(self) -> _NumericProfile:
        if self.dtype is not Dtype.NUMERIC:
            raise TypeError("numeric_profile on a categorical snapshot")
        arr = self.values
        nonnull = arr[~np.isnan(arr)]
        n = nonnull.size
        srt = np.sort(nonnull)
        if n:
            distinct = int(np.count_nonzero(np.diff(srt)) + 1)
            mean = float(nonnull.mean())
            total = float(nonnull.sum())
            lo, hi = float(srt[0]), float(srt[-1])
            med = float(np.median(srt))
        else:
            distinct, mean, total = 0, math.nan, math.nan
            lo = hi = med = math.nan
        return _NumericProfile(
            n_rows=arr.size,
            n_nonnull=n,
            nonnull=nonnull,
            sorted_nonnull=srt,
            n_distinct=distinct,
            mean=mean,
            total=total,
            minimum=lo,
            maximum=hi,
            median=med,
        )

    @cached_property
    def categorical_profile(self) -> _CategoricalProfile:
        if self.dtype is not Dtype.CATEGORICAL:
            raise TypeError("categorical_profile on a numeric snapshot")
        nonnull = [v for v in self.values if v]
        counts = Counter(nonnull)
        patterns = Counter(v.translate(PATTERN_TABLE) for v in nonnull)
        # count char classes over one concatenated string: O(total chars) in C
        joined = "".join(p * c for p, c in patterns.items())
        digit_total = joined.count("\\d")
        letter_total = joined.count("\\l")
        len_total = sum(len(v) for v in nonnull)
        return _CategoricalProfile(
            n_rows=len(self.values),
            n_nonnull=len(nonnull),
            counts=counts,
            pattern_counts=patterns,
            n_distinct=len(counts),
            len_total=len_total,
            letter_total=letter_total,
            digit_total=digit_total,
        )


def _as_float_array(values: Iterable) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.dtype == np.float64:
        return values.copy()
    seq = list(values)
    out = np.empty(len(seq), dtype=np.float64)
    for i, v in enumerate(seq):
        out[i] = math.nan if v is None else float(v)
    return out


def null_count(snapshot: ColumnSnapshot) -> int:
    if snapshot.dtype is Dtype.NUMERIC:
        return int(np.isnan(snapshot.values).sum())
    return sum(1 for v in snapshot.values if not v)


def nonnull_values(snapshot: ColumnSnapshot) -> list:
    """Non-null cells in original order."""
    if snapshot.dtype is Dtype.NUMERIC:
        arr = snapshot.values
        return list(arr[~np.isnan(arr)])
    return [v for v in snapshot.values if v]
