"""Statistical metric catalog over column snapshots.

Single-distribution metrics summarize one snapshot; two-distribution
metrics compare a target snapshot against a baseline snapshot. All
functions are pure and deterministic.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .column import PATTERN_TABLE, ColumnSnapshot, Dtype
from .errors import MetricDtypeError, NoDataError, UnknownMetricError

_SMOOTHING = 1e-10
_NUMERIC_HIST_BINS = 10
_CHI2_SMOOTHING = 0.5


class Arity(str, Enum):
    SINGLE = "single"
    TWO = "two"


@dataclass(frozen=True)
class MetricId:
    """A metric name plus its arity and the dtypes it applies to."""

    name: str
    arity: Arity
    dtypes: frozenset

    def applies_to(self, dtype: Dtype) -> bool:
        return dtype in self.dtypes


def _mk(name: str, arity: Arity, *dtypes: Dtype) -> MetricId:
    return MetricId(name=name, arity=arity, dtypes=frozenset(dtypes))


_N, _C = Dtype.NUMERIC, Dtype.CATEGORICAL

_CATALOG_ENTRIES = [
    # numeric single-distribution
    _mk("min", Arity.SINGLE, _N),
    _mk("max", Arity.SINGLE, _N),
    _mk("mean", Arity.SINGLE, _N),
    _mk("median", Arity.SINGLE, _N),
    _mk("sum", Arity.SINGLE, _N),
    _mk("range", Arity.SINGLE, _N),
    # shared single-distribution
    _mk("row_count", Arity.SINGLE, _N, _C),
    _mk("unique_ratio", Arity.SINGLE, _N, _C),
    _mk("complete_ratio", Arity.SINGLE, _N, _C),
    # categorical single-distribution
    _mk("str_len", Arity.SINGLE, _C),
    _mk("char_len", Arity.SINGLE, _C),
    _mk("digit_len", Arity.SINGLE, _C),
    _mk("punc_len", Arity.SINGLE, _C),
    _mk("dist_val_count", Arity.SINGLE, _C),
    # numeric two-distribution
    _mk("EMD", Arity.TWO, _N),
    _mk("JS_div", Arity.TWO, _N, _C),
    _mk("KL_div", Arity.TWO, _N, _C),
    _mk("KS_dist", Arity.TWO, _N),
    _mk("Cohen_d", Arity.TWO, _N),
    # categorical two-distribution
    _mk("L1", Arity.TWO, _C),
    _mk("Linf", Arity.TWO, _C),
    _mk("Cosine", Arity.TWO, _C),
    _mk("Chi_squared", Arity.TWO, _C),
    _mk("Pat_L1", Arity.TWO, _C),
    _mk("Pat_Linf", Arity.TWO, _C),
    _mk("Pat_Cosine", Arity.TWO, _C),
    _mk("Pat_Chisquare", Arity.TWO, _C),
    _mk("Pat_JS_div", Arity.TWO, _C),
    _mk("Pat_KL_div", Arity.TWO, _C),
]

CATALOG: Mapping[str, MetricId] = {m.name: m for m in _CATALOG_ENTRIES}

# Pat_* metrics reuse the plain categorical machinery on pattern histograms.
_PATTERN_BASE = {
    "Pat_L1": "L1",
    "Pat_Linf": "Linf",
    "Pat_Cosine": "Cosine",
    "Pat_Chisquare": "Chi_squared",
    "Pat_JS_div": "JS_div",
    "Pat_KL_div": "KL_div",
}


def metric(name: str) -> MetricId:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownMetricError(f"unknown metric {name!r}") from None


def metrics_for(dtype: Dtype, arity: Arity | None = None) -> list[MetricId]:
    """Catalog entries applicable to a dtype, in stable catalog order."""
    out = []
    for m in _CATALOG_ENTRIES:
        if not m.applies_to(dtype):
            continue
        if arity is not None and m.arity is not arity:
            continue
        out.append(m)
    return out


@dataclass(frozen=True)
class CategoryHistogram:
    """Counts per category key; ``total`` is the number of counted cells."""

    bins: Mapping[str, int]
    total: int

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("histogram total must be positive")
        if sum(self.bins.values()) != self.total:
            raise ValueError("bin counts do not sum to total")


def generate_pattern(value: str) -> str:
    """Map each character to its class token: digit, letter, or other."""
    return value.translate(PATTERN_TABLE)


def pattern_histogram(snapshot: ColumnSnapshot) -> CategoryHistogram:
    """Histogram of per-cell pattern strings over non-null cells."""
    if snapshot.dtype is not Dtype.CATEGORICAL:
        raise MetricDtypeError("pattern_histogram requires a categorical column")
    prof = snapshot.categorical_profile
    if prof.n_nonnull == 0:
        raise NoDataError(f"column {snapshot.column_id!r} has no non-null cells")
    return CategoryHistogram(bins=dict(prof.pattern_counts), total=prof.n_nonnull)


def compute_single(snapshot: ColumnSnapshot, metric_id: MetricId | str) -> float:
    """Evaluate a single-distribution metric on one snapshot."""
    m = metric(metric_id) if isinstance(metric_id, str) else metric_id
    if m.arity is not Arity.SINGLE:
        raise ValueError(f"{m.name} is a two-distribution metric")
    if not m.applies_to(snapshot.dtype):
        raise MetricDtypeError(f"{m.name} is not defined for {snapshot.dtype.value} columns")

    if snapshot.dtype is Dtype.NUMERIC:
        prof = snapshot.numeric_profile
        if m.name == "row_count":
            return float(prof.n_rows)
        if m.name == "complete_ratio":
            return prof.n_nonnull / prof.n_rows if prof.n_rows else 0.0
        if prof.n_nonnull == 0:
            raise NoDataError(f"column {snapshot.column_id!r} has no non-null cells")
        if m.name == "min":
            return prof.minimum
        if m.name == "max":
            return prof.maximum
        if m.name == "mean":
            return prof.mean
        if m.name == "median":
            return prof.median
        if m.name == "sum":
            return prof.total
        if m.name == "range":
            return prof.maximum - prof.minimum
        if m.name == "unique_ratio":
            return prof.n_distinct / prof.n_nonnull
        raise UnknownMetricError(m.name)

    cprof = snapshot.categorical_profile
    if m.name == "row_count":
        return float(cprof.n_rows)
    if m.name == "complete_ratio":
        return cprof.n_nonnull / cprof.n_rows if cprof.n_rows else 0.0
    if cprof.n_nonnull == 0:
        raise NoDataError(f"column {snapshot.column_id!r} has no non-null cells")
    if m.name == "str_len":
        return cprof.len_total / cprof.n_nonnull
    if m.name == "char_len":
        return cprof.letter_total / cprof.n_nonnull
    if m.name == "digit_len":
        return cprof.digit_total / cprof.n_nonnull
    if m.name == "punc_len":
        return (cprof.len_total - cprof.letter_total - cprof.digit_total) / cprof.n_nonnull
    if m.name == "unique_ratio":
        return cprof.n_distinct / cprof.n_nonnull
    if m.name == "dist_val_count":
        return float(cprof.n_distinct)
    raise UnknownMetricError(m.name)


def compute_two(
    current: ColumnSnapshot,
    baseline: ColumnSnapshot,
    metric_id: MetricId | str,
) -> float:
    """Evaluate a two-distribution metric for (current, baseline)."""
    m = metric(metric_id) if isinstance(metric_id, str) else metric_id
    if m.arity is not Arity.TWO:
        raise ValueError(f"{m.name} is a single-distribution metric")
    if current.dtype is not baseline.dtype:
        raise MetricDtypeError("current and baseline dtypes differ")
    if not m.applies_to(current.dtype):
        raise MetricDtypeError(f"{m.name} is not defined for {current.dtype.value} columns")

    if current.dtype is Dtype.NUMERIC:
        x = current.numeric_profile
        y = baseline.numeric_profile
        if x.n_nonnull == 0 or y.n_nonnull == 0:
            raise NoDataError("two-distribution metric with an empty non-null sample")
        if m.name == "EMD":
            return _emd(x.sorted_nonnull, y.sorted_nonnull)
        if m.name == "KS_dist":
            return _ks(x.sorted_nonnull, y.sorted_nonnull)
        if m.name == "Cohen_d":
            return _cohen_d(x.nonnull, y.nonnull)
        if m.name in ("JS_div", "KL_div"):
            p, q = _numeric_hist_freqs(x, y)
            return _js(p, q) if m.name == "JS_div" else _kl(p, q)
        raise UnknownMetricError(m.name)

    xprof = current.categorical_profile
    yprof = baseline.categorical_profile
    if xprof.n_nonnull == 0 or yprof.n_nonnull == 0:
        raise NoDataError("two-distribution metric with an empty non-null sample")
    base_name = _PATTERN_BASE.get(m.name, m.name)
    if m.name in _PATTERN_BASE:
        xc, yc = xprof.pattern_counts, yprof.pattern_counts
    else:
        xc, yc = xprof.counts, yprof.counts
    return _categorical_distance(base_name, xc, yc)


def _categorical_distance(name: str, xc: Counter, yc: Counter) -> float:
    keys = sorted(set(xc) | set(yc))
    x = np.array([xc.get(k, 0) for k in keys], dtype=np.float64)
    y = np.array([yc.get(k, 0) for k in keys], dtype=np.float64)
    if name == "Chi_squared":
        return _chi_squared(x, y)
    p = x / x.sum()
    q = y / y.sum()
    if name == "L1":
        return float(np.abs(p - q).sum())
    if name == "Linf":
        return float(np.abs(p - q).max())
    if name == "Cosine":
        denom = float(np.linalg.norm(p) * np.linalg.norm(q))
        return 1.0 - float(np.dot(p, q)) / denom
    if name in ("JS_div", "KL_div"):
        ps = (x + _SMOOTHING) / (x + _SMOOTHING).sum()
        qs = (y + _SMOOTHING) / (y + _SMOOTHING).sum()
        return _js(ps, qs) if name == "JS_div" else _kl(ps, qs)
    raise UnknownMetricError(name)


def _emd(xs: np.ndarray, ys: np.ndarray) -> float:
    # exact 1-D Wasserstein distance: area between the two empirical CDFs
    grid = np.concatenate([xs, ys])
    grid.sort(kind="mergesort")
    deltas = np.diff(grid)
    f1 = np.searchsorted(xs, grid[:-1], side="right") / xs.size
    f2 = np.searchsorted(ys, grid[:-1], side="right") / ys.size
    return float(np.sum(np.abs(f1 - f2) * deltas))


def _ks(xs: np.ndarray, ys: np.ndarray) -> float:
    grid = np.concatenate([xs, ys])
    grid.sort(kind="mergesort")
    f1 = np.searchsorted(xs, grid, side="right") / xs.size
    f2 = np.searchsorted(ys, grid, side="right") / ys.size
    return float(np.abs(f1 - f2).max())


def _cohen_d(x: np.ndarray, y: np.ndarray) -> float:
    n1, n2 = x.size, y.size
    diff = abs(float(x.mean()) - float(y.mean()))
    df = n1 + n2 - 2
    if df <= 0:
        pooled = 0.0
    else:
        v1 = float(x.var(ddof=1)) if n1 > 1 else 0.0
        v2 = float(y.var(ddof=1)) if n2 > 1 else 0.0
        pooled = math.sqrt(((n1 - 1) * v1 + (n2 - 1) * v2) / df)
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / pooled


def _numeric_hist_freqs(x, y) -> tuple[np.ndarray, np.ndarray]:
    # shared equal-width bins over the pooled range of both samples
    lo = min(x.sorted_nonnull[0], y.sorted_nonnull[0])
    hi = max(x.sorted_nonnull[-1], y.sorted_nonnull[-1])
    if lo == hi:
        one = np.array([1.0])
        return one, one
    cx, _ = np.histogram(x.nonnull, bins=_NUMERIC_HIST_BINS, range=(lo, hi))
    cy, _ = np.histogram(y.nonnull, bins=_NUMERIC_HIST_BINS, range=(lo, hi))
    p = (cx + _SMOOTHING) / (cx + _SMOOTHING).sum()
    q = (cy + _SMOOTHING) / (cy + _SMOOTHING).sum()
    return p, q


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(p * np.log(p / q)))


def _js(p: np.ndarray, q: np.ndarray) -> float:
    mid = 0.5 * (p + q)
    return 0.5 * _kl(p, mid) + 0.5 * _kl(q, mid)


def _chi_squared(x: np.ndarray, y: np.ndarray) -> float:
    # two-sample homogeneity statistic with additive count smoothing
    xs = x + _CHI2_SMOOTHING
    ys = y + _CHI2_SMOOTHING
    col = xs + ys
    n = col.sum()
    ex = xs.sum() * col / n
    ey = ys.sum() * col / n
    return float(np.sum((xs - ex) ** 2 / ex) + np.sum((ys - ey) ** 2 / ey))
