"""Synthetic DQ-issue corpus, recall estimation, and program selection.

The corpus is a set of deterministic single-issue corruptions of a clean
column. Each candidate constraint's recall set is the subset of corpus
variants it catches; the greedy selector then assembles a conjunctive
program maximizing covered recall under the FPR budget.
"""

from __future__ import annotations

import logging
import math
import string
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .column import ColumnSnapshot, Dtype
from .constraints import DqConstraint, evaluate_constraint
from .errors import (
    DtypeMismatchError,
    InapplicableIssueError,
    MissingDonorError,
    NoDataError,
    NonPositiveLogError,
)
from .metrics import Arity, compute_single, compute_two, metric
from .stationarity import transform_new_point

logger = logging.getLogger(__name__)

#: admission slack for budget comparisons; sums of float FPR bounds may
#: exceed an exactly-equal budget by a few ulps
BUDGET_REL_TOL = 1e-9

_INSERTION_ALPHABET = string.ascii_letters + string.digits + string.punctuation


class IssueType(str, Enum):
    SCHEMA_CHANGE = "schema_change"
    UNIT_CHANGE = "unit_change"
    CASING_CHANGE = "casing_change"
    INCREASED_NULLS = "increased_nulls"
    VOLUME_CHANGE = "volume_change"
    DISTRIBUTION_CHANGE = "distribution_change"
    CHAR_PERTURBATION = "char_perturbation"
    CHAR_INSERTION = "char_insertion"
    CHAR_DELETION = "char_deletion"
    WHITESPACE_PADDING = "whitespace_padding"


#: per-type corruption parameters. Percentages unless noted; volume
#: parameters are resampling factors; negative distribution parameters
#: select the last (instead of first) slice of the sorted values.
ISSUE_PARAMETERS: Mapping[IssueType, tuple[float, ...]] = {
    IssueType.SCHEMA_CHANGE: (1.0, 10.0, 100.0),
    IssueType.UNIT_CHANGE: (10.0, 100.0, 1000.0),
    IssueType.CASING_CHANGE: (1.0, 10.0, 100.0),
    IssueType.INCREASED_NULLS: (1.0, 50.0, 100.0),
    IssueType.VOLUME_CHANGE: (2.0, 10.0, 0.5, 0.1),
    IssueType.DISTRIBUTION_CHANGE: (10.0, 50.0, -10.0, -50.0),
    IssueType.CHAR_PERTURBATION: (1.0, 10.0, 100.0),
    IssueType.CHAR_INSERTION: (10.0, 50.0),
    IssueType.CHAR_DELETION: (10.0, 50.0),
    IssueType.WHITESPACE_PADDING: (10.0, 50.0, 100.0),
}

_NUMERIC_ONLY = {IssueType.UNIT_CHANGE}
_CATEGORICAL_ONLY = {
    IssueType.CASING_CHANGE,
    IssueType.CHAR_INSERTION,
    IssueType.WHITESPACE_PADDING,
}

#: seeded variants generated per (issue type, parameter) pair
REPLICATES_PER_PAIR = 2


@dataclass(frozen=True)
class DqIssueSpec:
    """One corruption to apply: issue type, magnitude, and RNG seed."""

    issue_type: IssueType
    parameter: float
    seed: int


@dataclass(frozen=True)
class VariantCorpus:
    """Synthetically corrupted variants of one clean snapshot."""

    variants: tuple[tuple[DqIssueSpec, ColumnSnapshot], ...]
    base_index: int

    def __len__(self) -> int:
        return len(self.variants)


@dataclass(frozen=True)
class DqProgram:
    """Conjunctive DQ program: selected constraints plus check-time context.

    ``transform_context`` maps each constrained metric to the trailing raw
    metric values its transform needs at validation time.
    ``recall_covered`` is fit-time diagnostic metadata and is excluded
    from equality and serialization.
    """

    delta: float
    constraints: tuple[DqConstraint, ...]
    fpr_total: float
    transform_context: Mapping[str, tuple[float, ...]]
    column_id: str = ""
    dtype: Dtype | None = None
    recall_covered: int | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.constraints)


def issue_applies(issue_type: IssueType, dtype: Dtype) -> bool:
    if issue_type in _NUMERIC_ONLY:
        return dtype is Dtype.NUMERIC
    if issue_type in _CATEGORICAL_ONLY:
        return dtype is Dtype.CATEGORICAL
    return True


def applicable_pairs(dtype: Dtype, has_donor: bool) -> list[tuple[IssueType, float]]:
    """(issue type, parameter) pairs the corpus will instantiate."""
    pairs = []
    for issue_type, params in ISSUE_PARAMETERS.items():
        if not issue_applies(issue_type, dtype):
            continue
        if issue_type is IssueType.SCHEMA_CHANGE and not has_donor:
            continue
        pairs.extend((issue_type, p) for p in params)
    return pairs


def inject(
    base: ColumnSnapshot,
    spec: DqIssueSpec,
    donor: ColumnSnapshot | None = None,
) -> ColumnSnapshot:
    """Apply one synthetic DQ issue to a snapshot, deterministically."""
    t = spec.issue_type
    if not issue_applies(t, base.dtype):
        raise InapplicableIssueError(f"{t.value} does not apply to {base.dtype.value} columns")
    rng = np.random.default_rng(spec.seed)
    p = spec.parameter

    if t is IssueType.SCHEMA_CHANGE:
        if donor is None:
            raise MissingDonorError("schema change requires a donor column")
        if donor.dtype is not base.dtype:
            raise DtypeMismatchError("donor dtype differs from the target column")
        values = _inject_schema_change(base, donor, p, rng)
    elif t is IssueType.UNIT_CHANGE:
        values = base.values * p
    elif t is IssueType.CASING_CHANGE:
        values = _inject_casing(base.values, p, rng)
    elif t is IssueType.INCREASED_NULLS:
        values = _inject_nulls(base, p, rng)
    elif t is IssueType.VOLUME_CHANGE:
        values = _inject_volume(base, p, rng)
    elif t is IssueType.DISTRIBUTION_CHANGE:
        values = _inject_distribution_change(base, p, rng)
    elif t is IssueType.CHAR_PERTURBATION:
        values = _apply_charwise(base, lambda c, ln: (_perturb_codes(c, p, rng), ln))
    elif t is IssueType.CHAR_INSERTION:
        values = _inject_insertion(base.values, p, rng)
    elif t is IssueType.CHAR_DELETION:
        values = _apply_charwise(base, lambda c, ln: _delete_codes(c, ln, p, rng))
    elif t is IssueType.WHITESPACE_PADDING:
        values = _inject_padding(base.values, p, rng)
    else:  # pragma: no cover
        raise InapplicableIssueError(f"unhandled issue type {t}")

    return ColumnSnapshot(base.column_id, base.dtype, values, base.execution_index)


def build_corpus(
    base: ColumnSnapshot,
    donor: ColumnSnapshot | None = None,
    master_seed: int = 0,
) -> VariantCorpus:
    """All applicable corruptions of ``base``, two seeded replicates each."""
    if len(base) == 0:
        raise NoDataError("cannot build a corpus from an empty snapshot")
    if donor is None and issue_applies(IssueType.SCHEMA_CHANGE, base.dtype):
        logger.warning(
            "no donor column for %s; skipping schema-change variants", base.column_id
        )
    variants: list[tuple[DqIssueSpec, ColumnSnapshot]] = []
    type_order = list(ISSUE_PARAMETERS)
    for issue_type, param in applicable_pairs(base.dtype, donor is not None):
        t_idx = type_order.index(issue_type)
        p_idx = ISSUE_PARAMETERS[issue_type].index(param)
        for rep in range(REPLICATES_PER_PAIR):
            seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(t_idx, p_idx, rep))
            seed = int(seq.generate_state(1, np.uint64)[0])
            spec = DqIssueSpec(issue_type=issue_type, parameter=param, seed=seed)
            variants.append((spec, inject(base, spec, donor)))
    return VariantCorpus(variants=tuple(variants), base_index=base.execution_index)


def variant_metric_values(
    corpus: VariantCorpus,
    metric_names: Sequence[str],
    baseline: ColumnSnapshot,
) -> dict[str, list[float | None]]:
    """Raw metric value per (metric, variant); ``None`` marks "no data".

    Two-distribution metrics compare each variant against the baseline
    (the most recent clean snapshot). Computing this once and sharing it
    across all candidates of the same metric keeps recall estimation
    linear in the corpus size.
    """
    out: dict[str, list[float | None]] = {}
    for name in metric_names:
        m = metric(name)
        vals: list[float | None] = []
        for _, variant in corpus.variants:
            try:
                if m.arity is Arity.SINGLE:
                    vals.append(compute_single(variant, m))
                else:
                    vals.append(compute_two(variant, baseline, m))
            except NoDataError:
                vals.append(None)
        out[name] = vals
    return out


def recall_set(
    q: DqConstraint,
    corpus: VariantCorpus,
    transform_context: Mapping[str, Sequence[float]],
    baseline: ColumnSnapshot,
    metric_values: Mapping[str, Sequence[float | None]] | None = None,
) -> frozenset[int]:
    """Indices of corpus variants the constraint catches.

    A variant on which the metric cannot be computed at all ("no data",
    e.g. fully nulled) counts as caught: the constraint would flag it at
    validation time.
    """
    if metric_values is None:
        metric_values = variant_metric_values(corpus, [q.metric], baseline)
    values = metric_values[q.metric]
    tail = transform_context.get(q.metric, ())
    caught = []
    for idx, raw in enumerate(values):
        if raw is None:
            caught.append(idx)
            continue
        try:
            transformed = transform_new_point(q.transform, tail, raw)
        except NonPositiveLogError:
            caught.append(idx)
            continue
        if not evaluate_constraint(q, transformed):
            caught.append(idx)
    return frozenset(caught)


def greedy_select(
    candidates: Sequence[DqConstraint],
    recall_sets: Sequence[frozenset[int]],
    delta: float,
    max_clauses: int | None = None,
    transform_context: Mapping[str, tuple[float, ...]] | None = None,
) -> DqProgram:
    """Budgeted maximum-coverage greedy with a best-singleton fallback.

    Repeatedly picks the candidate maximizing marginal-recall / FPR-bound
    (ties: lower FPR bound, then lower index), admitting it only when it
    fits the remaining budget, and stops once no candidate adds recall.
    The greedy set is finally compared against the best in-budget
    singleton; whichever covers more variants wins (ties keep the greedy
    set).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if len(candidates) != len(recall_sets):
        raise ValueError("candidates and recall sets are misaligned")
    budget = delta * (1.0 + BUDGET_REL_TOL)
    limit = len(candidates) if max_clauses is None else max(0, max_clauses)

    remaining = list(range(len(candidates)))
    chosen: list[int] = []
    covered: set[int] = set()
    fpr_total = 0.0
    while remaining and len(chosen) < limit:
        best_i = -1
        best_key: tuple[float, float, float] | None = None
        best_gain = 0
        for i in remaining:
            gain = len(recall_sets[i] - covered)
            ratio = gain / candidates[i].fpr_bound
            key = (ratio, -candidates[i].fpr_bound, -i)
            if best_key is None or key > best_key:
                best_key, best_i, best_gain = key, i, gain
        if best_gain == 0:
            break
        remaining.remove(best_i)
        fpr = candidates[best_i].fpr_bound
        if fpr_total + fpr <= budget:
            chosen.append(best_i)
            covered |= recall_sets[best_i]
            fpr_total += fpr

    # fallback: the classic budgeted-max-coverage guarantee needs the best
    # affordable singleton from the full candidate set
    best_single = -1
    best_single_key: tuple[int, float, float] | None = None
    for i, q in enumerate(candidates):
        if q.fpr_bound > budget:
            continue
        key = (len(recall_sets[i]), -q.fpr_bound, -i)
        if best_single_key is None or key > best_single_key:
            best_single_key, best_single = key, i
    if best_single >= 0 and len(recall_sets[best_single]) > len(covered):
        chosen = [best_single]
        covered = set(recall_sets[best_single])
        fpr_total = candidates[best_single].fpr_bound

    selected = tuple(candidates[i] for i in chosen)
    context = dict(transform_context or {})
    context = {q.metric: tuple(context.get(q.metric, ())) for q in selected}
    return DqProgram(
        delta=delta,
        constraints=selected,
        fpr_total=math.fsum(q.fpr_bound for q in selected),
        transform_context=context,
        recall_covered=len(covered),
    )


# --- injector internals -------------------------------------------------

def _pct_count(n: int, p: float) -> int:
    if n <= 0:
        return 0
    return max(1, int(round(n * p / 100.0)))


def _inject_schema_change(base, donor, p, rng) -> list | np.ndarray:
    n = len(base)
    k = _pct_count(n, p)
    positions = rng.choice(n, size=k, replace=False)
    picks = rng.integers(0, len(donor), size=k)
    if base.dtype is Dtype.NUMERIC:
        out = base.values.copy()
        out[positions] = donor.values[picks]
        return out
    out = list(base.values)
    donor_vals = donor.values
    for pos, pick in zip(positions, picks):
        out[pos] = donor_vals[pick]
    return out


def _inject_casing(cells: list, p: float, rng) -> list:
    idx = [i for i, v in enumerate(cells) if v]
    k = _pct_count(len(idx), p)
    out = list(cells)
    if not idx:
        return out
    for sel in rng.choice(len(idx), size=k, replace=False):
        i = idx[sel]
        out[i] = out[i].swapcase()
    return out


def _inject_nulls(base: ColumnSnapshot, p: float, rng) -> list | np.ndarray:
    n = len(base)
    k = _pct_count(n, p)
    positions = rng.choice(n, size=k, replace=False)
    if base.dtype is Dtype.NUMERIC:
        out = base.values.copy()
        out[positions] = 0.0
        return out
    out = list(base.values)
    for i in positions:
        out[i] = ""
    return out


def _inject_volume(base: ColumnSnapshot, factor: float, rng) -> list | np.ndarray:
    n = len(base)
    m = int(round(n * factor))
    idx = rng.choice(n, size=m, replace=m > n)
    if base.dtype is Dtype.NUMERIC:
        return base.values[idx]
    cells = base.values
    return [cells[i] for i in idx]


def _inject_distribution_change(base: ColumnSnapshot, p: float, rng) -> list | np.ndarray:
    take_first = p > 0
    share = abs(p)
    n = len(base)
    if base.dtype is Dtype.NUMERIC:
        nn = base.numeric_profile.sorted_nonnull
    else:
        nn = sorted(v for v in base.values if v)
    if len(nn) == 0:
        raise NoDataError("distribution change needs at least one non-null cell")
    k = _pct_count(len(nn), share)
    biased = nn[:k] if take_first else nn[len(nn) - k:]
    picks = rng.integers(0, k, size=n)
    if base.dtype is Dtype.NUMERIC:
        return np.asarray(biased)[picks]
    return [biased[i] for i in picks]


def _inject_insertion(cells: list, p: float, rng) -> list:
    out = list(cells)
    idx = [i for i, v in enumerate(cells) if v]
    hits = rng.random(len(idx)) < p / 100.0
    for j, i in enumerate(idx):
        if not hits[j]:
            continue
        v = out[i]
        ch = _INSERTION_ALPHABET[rng.integers(0, len(_INSERTION_ALPHABET))]
        pos = int(rng.integers(0, len(v) + 1))
        out[i] = v[:pos] + ch + v[pos:]
    return out


def _inject_padding(cells: list, p: float, rng) -> list:
    out = list(cells)
    idx = [i for i, v in enumerate(cells) if v]
    k = _pct_count(len(idx), p)
    if not idx:
        return out
    chosen = rng.choice(len(idx), size=k, replace=False)
    leading = rng.integers(0, 2, size=k)
    for j, sel in enumerate(chosen):
        i = idx[sel]
        out[i] = (" " + out[i]) if leading[j] else (out[i] + " ")
    return out


def _explode(strings: list[str]) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate strings into one code-point array plus per-string lengths."""
    joined = "".join(strings)
    codes = np.frombuffer(joined.encode("utf-32-le"), dtype=np.uint32).copy()
    lens = np.fromiter((len(s) for s in strings), dtype=np.int64, count=len(strings))
    return codes, lens


def _implode(codes: np.ndarray, lens: np.ndarray) -> list[str]:
    joined = codes.tobytes().decode("utf-32-le")
    out = []
    start = 0
    for ln in lens:
        out.append(joined[start:start + ln])
        start += ln
    return out


def _apply_charwise(base: ColumnSnapshot, op) -> list | np.ndarray:
    """Run a code-point level edit over all non-null cells.

    Numeric cells round-trip through their decimal string form; cells
    whose edited form no longer parses become nulls.
    """
    if base.dtype is Dtype.NUMERIC:
        arr = base.values
        nonnull_idx = np.flatnonzero(~np.isnan(arr))
        strings = [repr(float(arr[i])) for i in nonnull_idx]
        codes, lens = _explode(strings)
        codes, lens = op(codes, lens)
        edited = _implode(codes, lens)
        out = arr.copy()
        for i, s in zip(nonnull_idx, edited):
            try:
                out[i] = float(s)
            except ValueError:
                out[i] = math.nan
        return out
    cells = base.values
    idx = [i for i, v in enumerate(cells) if v]
    strings = [cells[i] for i in idx]
    codes, lens = _explode(strings)
    codes, lens = op(codes, lens)
    edited = _implode(codes, lens)
    out = list(cells)
    for i, s in zip(idx, edited):
        out[i] = s
    return out


def _perturb_codes(codes: np.ndarray, p: float, rng) -> np.ndarray:
    """Rewrite each digit/letter to a different one of its class with prob p%."""
    n = codes.size
    hit = rng.random(n) < p / 100.0
    # drawn for every position to keep the stream layout deterministic
    shift10 = rng.integers(1, 10, size=n, dtype=np.uint32)
    shift26 = rng.integers(1, 26, size=n, dtype=np.uint32)
    out = codes.copy()
    digits = hit & (codes >= 48) & (codes <= 57)
    out[digits] = 48 + (codes[digits] - 48 + shift10[digits]) % 10
    upper = hit & (codes >= 65) & (codes <= 90)
    out[upper] = 65 + (codes[upper] - 65 + shift26[upper]) % 26
    lower = hit & (codes >= 97) & (codes <= 122)
    out[lower] = 97 + (codes[lower] - 97 + shift26[lower]) % 26
    return out


def _delete_codes(
    codes: np.ndarray, lens: np.ndarray, p: float, rng
) -> tuple[np.ndarray, np.ndarray]:
    """Drop each character with prob p%, tracking the per-cell lengths."""
    keep = rng.random(codes.size) >= p / 100.0
    ends = np.cumsum(lens)
    starts = ends - lens
    kept_cum = np.concatenate([[0], np.cumsum(keep)])
    new_lens = kept_cum[ends] - kept_cum[starts]
    return codes[keep], new_lens
