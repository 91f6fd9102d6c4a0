"""Candidate constraint construction with worst-case FPR bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .stationarity import MetricSeries, TransformKind, TransformSpec

#: beta sweep multipliers: 1.0, 1.5, ..., 10.0 (19 grid points)
DEFAULT_BETA_GRID: tuple[float, ...] = tuple(1.0 + 0.5 * i for i in range(19))

#: FPR assigned to zero-variance (equality) constraints; keeps the
#: greedy benefit/cost ratio finite while treating constants as near-hard
#: invariants
DEGENERATE_FPR = 1e-9

_EQUALITY_REL_TOL = 1e-9


class BoundKind(str, Enum):
    CHEBYSHEV = "chebyshev"
    CANTELLI = "cantelli"
    CLT = "clt"


# One-sided distance-like metrics: deviations only matter upward.
_CANTELLI_METRICS = frozenset(
    {"EMD", "JS_div", "KL_div", "KS_dist", "Cohen_d", "L1", "Linf", "Cosine", "Chi_squared"}
)

# Cell-averaged or count metrics whose sampling distribution is normal.
_CLT_METRICS = frozenset(
    {"row_count", "mean", "str_len", "char_len", "digit_len", "punc_len", "complete_ratio"}
)


def bound_kind_for(metric_name: str) -> BoundKind:
    """Concentration bound family for a metric (Chebyshev is the fallback)."""
    if metric_name in _CANTELLI_METRICS or metric_name.startswith("Pat_"):
        return BoundKind.CANTELLI
    if metric_name in _CLT_METRICS:
        return BoundKind.CLT
    return BoundKind.CHEBYSHEV


@dataclass(frozen=True)
class DqConstraint:
    """Threshold constraint on one (transformed) metric.

    ``theta_l`` is ``None`` for one-sided (Cantelli) constraints, which
    are unbounded below. ``fpr_bound`` is the worst-case expected
    false-positive rate of this constraint alone on clean data.
    """

    metric: str
    transform: TransformSpec
    theta_l: float | None
    theta_u: float
    beta: float
    mu: float
    sigma: float
    fpr_bound: float
    bound_kind: BoundKind

    def describe(self) -> str:
        lo = "-inf" if self.theta_l is None else f"{self.theta_l:.6g}"
        return (
            f"{self.metric} [{self.transform.describe()}] in "
            f"[{lo}, {self.theta_u:.6g}] (fpr<={self.fpr_bound:.3g})"
        )


def estimate_moments(stationary: Sequence[float]) -> tuple[float, float]:
    """Sample mean and unbiased (n-1) variance of a stationary series."""
    arr = np.asarray(stationary, dtype=np.float64)
    if arr.size < 2:
        raise ValueError("moment estimation needs at least 2 points")
    return float(arr.mean()), float(arr.var(ddof=1))


def fpr_bound(kind: BoundKind, sigma: float, beta: float) -> float:
    """Worst-case expected FPR of a constraint with half-width ``beta``."""
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0.0:
        return DEGENERATE_FPR
    ratio = beta / sigma
    if kind is BoundKind.CHEBYSHEV:
        return min(1.0, 1.0 / (ratio * ratio))
    if kind is BoundKind.CANTELLI:
        return 1.0 / (1.0 + ratio * ratio)
    return 1.0 - math.erf(ratio / math.sqrt(2.0))


def construct_constraints(
    series: Iterable[MetricSeries],
    beta_grid: Sequence[float] | None = None,
) -> list[DqConstraint]:
    """Sweep beta over the grid and emit one candidate per (metric, beta).

    A zero-variance series yields a single equality constraint with a
    tiny relative tolerance instead of the full sweep.
    """
    grid = tuple(beta_grid) if beta_grid is not None else DEFAULT_BETA_GRID
    if any(k <= 0 for k in grid):
        raise ValueError("beta grid multipliers must be positive")
    out: list[DqConstraint] = []
    for s in series:
        if s.transform.kind is TransformKind.NONE:
            raise ValueError(f"series for {s.metric!r} has no stationarizing transform")
        mu, var = estimate_moments(s.stationary)
        sigma = math.sqrt(var)
        kind = bound_kind_for(s.metric)
        if sigma == 0.0:
            tol = _EQUALITY_REL_TOL * max(1.0, abs(mu))
            out.append(
                DqConstraint(
                    metric=s.metric,
                    transform=s.transform,
                    theta_l=None if kind is BoundKind.CANTELLI else mu - tol,
                    theta_u=mu + tol,
                    beta=tol,
                    mu=mu,
                    sigma=0.0,
                    fpr_bound=DEGENERATE_FPR,
                    bound_kind=kind,
                )
            )
            continue
        for k in grid:
            beta = k * sigma
            out.append(
                DqConstraint(
                    metric=s.metric,
                    transform=s.transform,
                    theta_l=None if kind is BoundKind.CANTELLI else mu - beta,
                    theta_u=mu + beta,
                    beta=beta,
                    mu=mu,
                    sigma=sigma,
                    fpr_bound=fpr_bound(kind, sigma, beta),
                    bound_kind=kind,
                )
            )
    return out


def evaluate_constraint(q: DqConstraint, value: float) -> bool:
    """True iff the transformed metric value satisfies the constraint.

    NaN never satisfies a constraint.
    """
    if math.isnan(value):
        return False
    if q.theta_l is not None and value < q.theta_l:
        return False
    return value <= q.theta_u
