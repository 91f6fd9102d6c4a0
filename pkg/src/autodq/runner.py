"""Fit DQ programs from history, validate new batches, persist programs."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .column import ColumnSnapshot, Dtype
from .constraints import (
    BoundKind,
    DqConstraint,
    construct_constraints,
    evaluate_constraint,
)
from .errors import (
    ContractViolationError,
    DtypeMismatchError,
    NoDataError,
    NonPositiveLogError,
    ProgramFormatError,
)
from .metrics import Arity, compute_single, compute_two, metric, metrics_for
from .stationarity import (
    MetricSeries,
    TransformKind,
    TransformSpec,
    make_stationary,
    transform_new_point,
)
from .synthesis import (
    DqProgram,
    build_corpus,
    greedy_select,
    recall_set,
    variant_metric_values,
)

logger = logging.getLogger(__name__)

MIN_HISTORY = 8

FORMAT_VERSION = 1


class Verdict(str, Enum):
    PASS = "pass"
    VIOLATION = "violation"


@dataclass(frozen=True)
class ConstraintRecord:
    """Outcome of one constraint on one batch."""

    metric: str
    transform: str
    observed: float | None
    theta_l: float | None
    theta_u: float
    fpr_bound: float
    satisfied: bool
    note: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    """Per-constraint outcomes plus the overall verdict for one batch."""

    column_id: str
    verdict: Verdict
    records: tuple[ConstraintRecord, ...]
    fpr_total: float
    delta: float

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def render(self) -> str:
        n_fail = sum(1 for r in self.records if not r.satisfied)
        lines = [
            f"column {self.column_id}: {self.verdict.value.upper()}"
            f" ({n_fail} of {len(self.records)} constraints violated)",
            f"  program: {len(self.records)} clauses,"
            f" fpr bound {self.fpr_total:.3g} <= delta {self.delta:.3g}",
        ]
        for r in self.records:
            mark = "ok  " if r.satisfied else "FAIL"
            lo = "-inf" if r.theta_l is None else f"{r.theta_l:.6g}"
            obs = "n/a" if r.observed is None else f"{r.observed:.6g}"
            line = (
                f"  [{mark}] {r.metric} ({r.transform}): observed {obs},"
                f" allowed [{lo}, {r.theta_u:.6g}], fpr bound {r.fpr_bound:.3g}"
            )
            if r.note:
                line += f" ({r.note})"
            lines.append(line)
        return "\n".join(lines)


def _validate_history(history: Sequence[ColumnSnapshot]) -> tuple[str, Dtype]:
    if len(history) < MIN_HISTORY:
        raise ValueError(
            f"history must contain at least {MIN_HISTORY} snapshots, got {len(history)}"
        )
    first = history[0]
    prev_idx = None
    for snap in history:
        if snap.dtype is not first.dtype:
            raise DtypeMismatchError("history snapshots have mixed dtypes")
        if snap.column_id != first.column_id:
            raise ValueError("history snapshots belong to different columns")
        if prev_idx is not None and snap.execution_index <= prev_idx:
            raise ValueError("history execution indices must be strictly increasing")
        prev_idx = snap.execution_index
    return first.column_id, first.dtype


def _metric_series(
    history: Sequence[ColumnSnapshot],
    dtype: Dtype,
    single_dist_only: bool,
) -> list[MetricSeries]:
    out = []
    for m in metrics_for(dtype):
        if single_dist_only and m.arity is Arity.TWO:
            continue
        try:
            if m.arity is Arity.SINGLE:
                raw = np.array([compute_single(c, m) for c in history])
            else:
                raw = np.array(
                    [compute_two(history[i + 1], history[i], m) for i in range(len(history) - 1)]
                )
        except NoDataError:
            logger.warning("metric %s not computable over history; skipped", m.name)
            continue
        if not np.all(np.isfinite(raw)):
            logger.warning("metric %s has non-finite history values; skipped", m.name)
            continue
        if raw.size < MIN_HISTORY:
            continue
        transform, stationary = make_stationary(raw)
        if transform.kind is TransformKind.NONE:
            logger.info("metric %s is non-stationary under all transforms; skipped", m.name)
            continue
        out.append(MetricSeries(metric=m.name, raw=raw, transform=transform, stationary=stationary))
    return out


@dataclass(frozen=True)
class _Prepared:
    column_id: str
    dtype: Dtype
    candidates: tuple[DqConstraint, ...]
    recall_sets: tuple[frozenset[int], ...]
    tails: Mapping[str, tuple[float, ...]]


def _prepare(
    history: Sequence[ColumnSnapshot],
    master_seed: int,
    donor: ColumnSnapshot | None,
    single_dist_only: bool,
    beta_grid: Sequence[float] | None,
) -> _Prepared:
    column_id, dtype = _validate_history(history)
    series = _metric_series(history, dtype, single_dist_only)
    candidates = construct_constraints(series, beta_grid)
    tails = {
        s.metric: tuple(float(v) for v in s.raw[len(s.raw) - s.transform.lag:])
        if s.transform.lag
        else ()
        for s in series
    }
    baseline = history[-1]
    if candidates:
        corpus = build_corpus(baseline, donor, master_seed)
        values = variant_metric_values(corpus, [s.metric for s in series], baseline)
        recall_sets = tuple(
            recall_set(q, corpus, tails, baseline, values) for q in candidates
        )
    else:
        logger.warning("no usable metric series for %s; program will be empty", column_id)
        recall_sets = ()
    return _Prepared(
        column_id=column_id,
        dtype=dtype,
        candidates=tuple(candidates),
        recall_sets=recall_sets,
        tails=tails,
    )


def fit(
    history: Sequence[ColumnSnapshot],
    delta: float,
    master_seed: int = 0,
    donor: ColumnSnapshot | None = None,
    single_dist_only: bool = False,
    max_clauses: int | None = None,
    beta_grid: Sequence[float] | None = None,
) -> DqProgram:
    """Fit a conjunctive DQ program for one column from its history."""
    return fit_many(
        history,
        [delta],
        master_seed=master_seed,
        donor=donor,
        single_dist_only=single_dist_only,
        max_clauses=max_clauses,
        beta_grid=beta_grid,
    )[0]


def fit_many(
    history: Sequence[ColumnSnapshot],
    deltas: Sequence[float],
    master_seed: int = 0,
    donor: ColumnSnapshot | None = None,
    single_dist_only: bool = False,
    max_clauses: int | None = None,
    beta_grid: Sequence[float] | None = None,
) -> list[DqProgram]:
    """Fit programs at several FPR budgets sharing one preparation pass.

    Candidate construction and recall estimation do not depend on the
    budget, so sweeping deltas this way costs one fit plus cheap selects.
    """
    for d in deltas:
        if not 0.0 < d < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {d}")
    prep = _prepare(history, master_seed, donor, single_dist_only, beta_grid)
    out = []
    for d in deltas:
        program = greedy_select(
            prep.candidates,
            prep.recall_sets,
            d,
            max_clauses=max_clauses,
            transform_context=prep.tails,
        )
        out.append(
            dataclasses.replace(program, column_id=prep.column_id, dtype=prep.dtype)
        )
    return out


def check(
    program: DqProgram,
    new_batch: ColumnSnapshot,
    baseline: ColumnSnapshot | None = None,
) -> ValidationReport:
    """Validate a new batch against a fitted program.

    ``baseline`` must be the most recent accepted snapshot; it feeds
    two-distribution metrics and is unused otherwise.
    """
    if program.dtype is not None and new_batch.dtype is not program.dtype:
        raise DtypeMismatchError(
            f"program is for {program.dtype.value} data, batch is {new_batch.dtype.value}"
        )
    if baseline is not None and baseline.dtype is not new_batch.dtype:
        raise DtypeMismatchError("baseline dtype differs from the batch dtype")

    raw_values: dict[str, float | None] = {}
    notes: dict[str, str] = {}
    for q in program.constraints:
        if q.metric in raw_values or q.metric in notes:
            continue
        m = metric(q.metric)
        try:
            if m.arity is Arity.SINGLE:
                raw_values[q.metric] = compute_single(new_batch, m)
            else:
                if baseline is None:
                    raise ValueError(
                        f"two-distribution constraint on {q.metric} requires a baseline snapshot"
                    )
                raw_values[q.metric] = compute_two(new_batch, baseline, m)
        except NoDataError:
            raw_values[q.metric] = None
            notes[q.metric] = "no data"

    records = []
    for q in program.constraints:
        raw = raw_values[q.metric]
        observed: float | None = None
        note = notes.get(q.metric)
        if raw is None:
            satisfied = False
        else:
            try:
                observed = transform_new_point(
                    q.transform, program.transform_context.get(q.metric, ()), raw
                )
            except NonPositiveLogError:
                satisfied = False
                note = "non-positive under log transform"
            else:
                satisfied = evaluate_constraint(q, observed)
                if not math.isfinite(observed):
                    note = "non-finite metric value"
        records.append(
            ConstraintRecord(
                metric=q.metric,
                transform=q.transform.describe(),
                observed=observed,
                theta_l=q.theta_l,
                theta_u=q.theta_u,
                fpr_bound=q.fpr_bound,
                satisfied=satisfied,
                note=note,
            )
        )
    verdict = Verdict.PASS if all(r.satisfied for r in records) else Verdict.VIOLATION
    return ValidationReport(
        column_id=program.column_id or new_batch.column_id,
        verdict=verdict,
        records=tuple(records),
        fpr_total=program.fpr_total,
        delta=program.delta,
    )


def advance(
    program: DqProgram,
    accepted_batch: ColumnSnapshot,
    baseline: ColumnSnapshot | None = None,
) -> DqProgram:
    """Roll the program's raw metric tails forward after an accepted batch.

    Thresholds are untouched; refitting is an explicit separate step. The
    batch must pass the program first.
    """
    report = check(program, accepted_batch, baseline)
    if not report.passed:
        raise ContractViolationError("cannot advance a program over a rejected batch")

    transforms = {q.metric: q.transform for q in program.constraints}
    new_context = {}
    for name, tail in program.transform_context.items():
        transform = transforms.get(name)
        if transform is None or transform.lag == 0:
            new_context[name] = tuple(tail)
            continue
        m = metric(name)
        if m.arity is Arity.SINGLE:
            raw = compute_single(accepted_batch, m)
        else:
            raw = compute_two(accepted_batch, baseline, m)
        rolled = tuple(tail) + (float(raw),)
        new_context[name] = rolled[len(rolled) - transform.lag:]
    return dataclasses.replace(program, transform_context=new_context)


def serialize(program: DqProgram) -> bytes:
    """Encode a program as canonical JSON (UTF-8, >=15 significant digits)."""
    if program.dtype is None:
        raise ValueError("cannot serialize a program without a dtype")
    doc = {
        "format_version": FORMAT_VERSION,
        "column_id": program.column_id,
        "dtype": program.dtype.value,
        "delta": program.delta,
        "fpr_total": program.fpr_total,
        "constraints": [
            {
                "metric": q.metric,
                "bound_kind": q.bound_kind.value,
                "transform": {"kind": q.transform.kind.value, "lag": q.transform.lag},
                "theta_l": q.theta_l,
                "theta_u": q.theta_u,
                "beta": q.beta,
                "mu": q.mu,
                "sigma": q.sigma,
                "fpr_bound": q.fpr_bound,
            }
            for q in program.constraints
        ],
        "transform_context": {
            name: list(tail) for name, tail in sorted(program.transform_context.items())
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False).encode("utf-8")


def deserialize(data: bytes) -> DqProgram:
    """Decode a serialized program, validating structure and names."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProgramFormatError(f"malformed program file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProgramFormatError("program file must contain a JSON object")

    version = _field(doc, "format_version")
    if version != FORMAT_VERSION:
        raise ProgramFormatError(
            f"unsupported format_version {version!r}, expected {FORMAT_VERSION}"
        )
    try:
        dtype = Dtype(_field(doc, "dtype"))
    except ValueError as exc:
        raise ProgramFormatError(f"invalid dtype: {exc}") from exc

    constraints = []
    raw_constraints = _field(doc, "constraints")
    if not isinstance(raw_constraints, list):
        raise ProgramFormatError("field 'constraints' must be a list")
    for i, entry in enumerate(raw_constraints):
        constraints.append(_parse_constraint(entry, i))

    raw_context = _field(doc, "transform_context")
    if not isinstance(raw_context, dict):
        raise ProgramFormatError("field 'transform_context' must be an object")
    context = {}
    for name, tail in raw_context.items():
        _known_metric(name, "transform_context")
        context[name] = tuple(float(v) for v in tail)

    return DqProgram(
        delta=float(_field(doc, "delta")),
        constraints=tuple(constraints),
        fpr_total=float(_field(doc, "fpr_total")),
        transform_context=context,
        column_id=str(_field(doc, "column_id")),
        dtype=dtype,
    )


def _field(doc: dict, name: str):
    if name not in doc:
        raise ProgramFormatError(f"missing field {name!r}")
    return doc[name]


def _known_metric(name: str, where: str) -> None:
    from .metrics import CATALOG

    if name not in CATALOG:
        raise ProgramFormatError(f"unknown metric {name!r} in {where}")


def _parse_constraint(entry, index: int) -> DqConstraint:
    if not isinstance(entry, dict):
        raise ProgramFormatError(f"constraints[{index}] must be an object")
    where = f"constraints[{index}]"
    name = _field(entry, "metric")
    _known_metric(name, where)
    try:
        kind = BoundKind(_field(entry, "bound_kind"))
    except ValueError as exc:
        raise ProgramFormatError(f"invalid bound_kind in {where}: {exc}") from exc
    raw_transform = _field(entry, "transform")
    if not isinstance(raw_transform, dict):
        raise ProgramFormatError(f"transform in {where} must be an object")
    try:
        transform = TransformSpec(
            TransformKind(_field(raw_transform, "kind")),
            int(_field(raw_transform, "lag")),
        )
    except ValueError as exc:
        raise ProgramFormatError(f"invalid transform in {where}: {exc}") from exc
    theta_l = _field(entry, "theta_l")
    return DqConstraint(
        metric=name,
        transform=transform,
        theta_l=None if theta_l is None else float(theta_l),
        theta_u=float(_field(entry, "theta_u")),
        beta=float(_field(entry, "beta")),
        mu=float(_field(entry, "mu")),
        sigma=float(_field(entry, "sigma")),
        fpr_bound=float(_field(entry, "fpr_bound")),
        bound_kind=kind,
    )
