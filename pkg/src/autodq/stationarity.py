"""Stationarity testing and lag differencing for metric time series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import NonFiniteSeriesError, NonPositiveLogError, SeriesTooShortError

#: asymptotic 5% critical value of the constant-only ADF regression
ADF_CRITICAL = -2.86

#: minimum series length accepted by the ADF regression
MIN_SERIES_LEN = 8

#: largest lag tried during differencing (covers weekly periodicity)
DEFAULT_MAX_LAG = 7


class TransformKind(str, Enum):
    IDENTITY = "identity"
    LAG = "lag"
    LOG_LAG = "log_lag"
    NONE = "none"


@dataclass(frozen=True)
class TransformSpec:
    """Stationarizing transform fitted to a metric series.

    ``lag`` is 0 for identity and the differencing distance otherwise.
    ``NONE`` marks a series for which no transform reached stationarity;
    such metrics are excluded from constraint construction.
    """

    kind: TransformKind
    lag: int = 0

    def __post_init__(self):
        if self.kind in (TransformKind.LAG, TransformKind.LOG_LAG):
            if self.lag < 1:
                raise ValueError("lag transforms require lag >= 1")
        elif self.lag != 0:
            raise ValueError(f"{self.kind.value} transform must have lag 0")

    def describe(self) -> str:
        if self.kind is TransformKind.IDENTITY:
            return "identity"
        if self.kind is TransformKind.LAG:
            return f"lag-{self.lag} diff"
        if self.kind is TransformKind.LOG_LAG:
            return f"log, lag-{self.lag} diff"
        return "none"


@dataclass(frozen=True)
class MetricSeries:
    """A metric's raw history values plus its fitted stationary form."""

    metric: str
    raw: np.ndarray
    transform: TransformSpec
    stationary: np.ndarray = field(default_factory=lambda: np.empty(0))


def adf_test(series: Sequence[float]) -> tuple[float, bool]:
    """Augmented Dickey-Fuller test, constant term, fixed lag order 1.

    Returns the regression t-statistic and whether it falls below the 5%
    critical value. Zero-variance series short-circuit to stationary (the
    regression would be singular on a constant input).
    """
    y = np.asarray(series, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise NonFiniteSeriesError("ADF input contains non-finite values")
    if y.size and np.ptp(y) == 0.0:
        return 0.0, True
    if y.size < MIN_SERIES_LEN:
        raise SeriesTooShortError(
            f"ADF needs at least {MIN_SERIES_LEN} points, got {y.size}"
        )
    dy = np.diff(y)
    target = dy[1:]
    design = np.column_stack([np.ones(target.size), y[1:-1], dy[:-1]])
    pinv = np.linalg.pinv(design)
    beta = pinv @ target
    resid = target - design @ beta
    dof = target.size - design.shape[1]
    s2 = float(resid @ resid) / dof
    se = math.sqrt(s2 * float((pinv @ pinv.T)[1, 1]))
    if se == 0.0:
        stat = -math.inf if beta[1] < 0 else math.inf
    else:
        stat = float(beta[1]) / se
    # a rank-deficient design (e.g. an exact linear ramp) makes the
    # statistic arbitrary; never call such a series stationary
    full_rank = np.linalg.matrix_rank(design) == design.shape[1]
    return stat, bool(full_rank and stat < ADF_CRITICAL)


def lag_transform(series: Sequence[float], lag: int) -> np.ndarray:
    """Difference a series against itself ``lag`` steps back."""
    y = np.asarray(series, dtype=np.float64)
    if lag < 1:
        raise ValueError("lag must be >= 1")
    if lag >= y.size:
        raise SeriesTooShortError(f"lag {lag} >= series length {y.size}")
    return y[lag:] - y[:-lag]


def make_stationary(
    raw: Sequence[float],
    max_lag: int = DEFAULT_MAX_LAG,
    stationary_test: Callable[[np.ndarray], tuple[float, bool]] | None = None,
) -> tuple[TransformSpec, np.ndarray]:
    """Find the first transform under which the series tests stationary.

    Tries the raw series, then lag differencing with lag 1..max_lag, then
    the same lag sweep after a natural log (only when all values are
    positive). Returns a ``NONE`` transform and an empty series when
    nothing passes.
    """
    y = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise NonFiniteSeriesError("series contains non-finite values")
    if y.size < MIN_SERIES_LEN:
        raise SeriesTooShortError(
            f"need at least {MIN_SERIES_LEN} points, got {y.size}"
        )
    test = stationary_test or adf_test

    _, ok = test(y)
    if ok:
        return TransformSpec(TransformKind.IDENTITY), y

    top = min(y.size - 1, max_lag)
    for lag in range(1, top + 1):
        diffed = lag_transform(y, lag)
        _, ok = test(diffed)
        if ok:
            return TransformSpec(TransformKind.LAG, lag), diffed

    if np.all(y > 0.0):
        logged = np.log(y)
        for lag in range(1, top + 1):
            diffed = lag_transform(logged, lag)
            _, ok = test(diffed)
            if ok:
                return TransformSpec(TransformKind.LOG_LAG, lag), diffed

    return TransformSpec(TransformKind.NONE), np.empty(0)


def transform_new_point(
    spec: TransformSpec, raw_tail: Sequence[float], new_value: float
) -> float:
    """Apply a fitted transform to a newly observed raw metric value.

    ``raw_tail`` holds the trailing raw values of the fitted series (at
    least ``spec.lag`` of them; the log for LOG_LAG is applied here, not
    stored).
    """
    if spec.kind is TransformKind.IDENTITY:
        return float(new_value)
    if spec.kind is TransformKind.NONE:
        raise ValueError("cannot transform a point with a NONE transform")
    if len(raw_tail) < spec.lag:
        raise ValueError(
            f"raw tail has {len(raw_tail)} values, need at least {spec.lag}"
        )
    anchor = float(raw_tail[-spec.lag])
    if spec.kind is TransformKind.LAG:
        return float(new_value) - anchor
    if new_value <= 0.0:
        raise NonPositiveLogError(
            f"non-positive value {new_value} under log transform"
        )
    return math.log(new_value) - math.log(anchor)
