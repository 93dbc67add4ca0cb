"""
Non-containment (ranking stability) indices and bootstrap ordering tests.

``get_sbt`` answers "how reproducible is each group's top-i item set?";
``ordering_split_test`` / ``total_ordering_test`` answer "how often does the
observed ordering of group means survive within-group resampling?". Both
report plain Monte Carlo proportions over ``n_boot`` replicates.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError, SBTWarning
from .ingest import GroupPartition, ResponseMatrix, normalize_response, small_group_warning
from .resample import ResampleSpec, chunk_size_for, run_replicates
from .summary import (
    MEAN,
    MeanTable,
    SummaryStatistic,
    group_means,
    rank_items,
    rank_matrix,
    strictly_greater,
    top_i_set,
)

TOTAL = "total"


@dataclass(frozen=True)
class NonContainmentMatrix:
    group_names: tuple[str, ...]
    columns: tuple[str, ...]
    rates: np.ndarray  # (G, k), entries in [0, 1]


@dataclass(frozen=True)
class SbtReport:
    mean_table: MeanTable
    noncontainment: NonContainmentMatrix
    group_sizes: dict[str, int]
    warnings: tuple[str, ...]
    n_boot: int
    seed: int | None
    top_sets: dict[str, tuple[tuple[int, ...], ...]] = field(default_factory=dict)
    excluded_rows: int = 0


@dataclass(frozen=True)
class OrderingTestResult:
    """Bootstrap probability of an ordering event among group means.

    ``p_hat`` is the fraction of replicates in which the event held; large
    values mean the observed ordering is reproducible under resampling. It
    is not a tail probability under a null hypothesis.
    """

    group_order: tuple[str, ...]
    observed_means: tuple[float, ...]  # aligned with group_order
    split: int | str
    n_boot: int
    event_count: int
    seed: int | None
    group_sizes: dict[str, int] = field(default_factory=dict)
    item: str | None = None
    undefined_replicates: int = 0
    warnings: tuple[str, ...] = ()

    @property
    def p_hat(self) -> float:
        return self.event_count / self.n_boot

    @property
    def std_error(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.n_boot)

    @property
    def p_hat_adjusted(self) -> float:
        """(count + 1) / (B + 1); reported only on request."""
        return (self.event_count + 1) / (self.n_boot + 1)


def group_stream_key(level: str) -> int:
    """Stable 64-bit stream key for one group, derived from its name.

    The top bit is always set so group streams never coincide with the
    ordering-test stream (key 0).
    """
    digest = hashlib.blake2b(normalize_response(level).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") | (1 << 63)


def _single_stratum(n: int, level: str = "all") -> GroupPartition:
    return GroupPartition((level,), (np.arange(n),), n_rows=n)


def _containment_counts(
    values: np.ndarray,
    targets: Sequence[frozenset[int]],
    spec: ResampleSpec,
    stat: SummaryStatistic,
    decreasing: bool,
    worker_count: int,
    level: str = "all",
    stream_key: int = 0,
) -> tuple[np.ndarray, int]:
    """Count replicates whose top-|t| set contains each target t.

    Returns (per-target counts, number of replicates with no defined
    column statistic).
    """
    k = values.shape[1]
    full = [len(t) == k for t in targets]
    target_idx = [np.fromiter(sorted(t), dtype=np.intp) for t in targets]
    sizes = [len(t) for t in targets]

    def consumer(draws):
        rows = np.stack([d.per_stratum_rows[0] for d in draws])
        stats = stat.columns(np.moveaxis(values[rows], 1, 0))
        undefined = np.isnan(stats).all(axis=1)
        position = np.argsort(rank_matrix(stats, decreasing), axis=1)
        out = np.zeros(len(targets) + 1, dtype=np.int64)
        for t, idx in enumerate(target_idx):
            if full[t]:
                out[t] = len(draws)
            else:
                contained = (position[:, idx].max(axis=1) < sizes[t]) & ~undefined
                out[t] = contained.sum()
        out[-1] = undefined.sum()
        return out

    partition = _single_stratum(values.shape[0], level)
    rows_per_replicate = spec.effective_size(level, values.shape[0])
    totals = run_replicates(
        partition, spec, worker_count, consumer, stream_key=stream_key,
        initial=np.zeros(len(targets) + 1, dtype=np.int64), batched=True,
        chunk_size=chunk_size_for(rows_per_replicate, k),
    )
    return totals[:-1], int(totals[-1])


def _undefined_warning(count: int, n_boot: int, where: str) -> str:
    return (
        f"{where}: {count} of {n_boot} replicate(s) had no defined column statistic "
        "and were counted as non-containing"
    )


def single_stratified_bootstrap(
    matrix: ResponseMatrix,
    target_indices: Iterable[int],
    spec: ResampleSpec = ResampleSpec(),
    stat: SummaryStatistic = MEAN,
    decreasing: bool = True,
    worker_count: int = 1,
) -> float:
    """Fraction of resamples whose top-i set misses part of ``target_indices``.

    The whole matrix is one stratum; ``i = len(target_indices)``. Returns a
    value in [0, 1]; 0 means the target was always reproduced.
    """
    target = frozenset(int(j) for j in target_indices)
    if not target:
        raise ConfigError("target_indices must not be empty")
    if len(target) > matrix.k:
        raise ConfigError(f"target has {len(target)} items but the matrix has {matrix.k}")
    bad = sorted(j for j in target if not 0 <= j < matrix.k)
    if bad:
        raise ConfigError(f"target indices out of range [0, {matrix.k}): {bad}")
    counts, undefined = _containment_counts(
        matrix.values, [target], spec, stat, decreasing, worker_count
    )
    if undefined:
        warnings.warn(_undefined_warning(undefined, spec.n_boot, "resampling"), SBTWarning)
    return (spec.n_boot - int(counts[0])) / spec.n_boot


def get_sbt(
    matrix: ResponseMatrix,
    partition: GroupPartition,
    spec: ResampleSpec = ResampleSpec(),
    stat: SummaryStatistic = MEAN,
    decreasing: bool = True,
    min_group_size: int = 3,
    worker_count: int = 1,
) -> SbtReport:
    """Group mean table plus the top-1 .. top-k non-containment matrix.

    Each group is resampled on its own rows only, with a replicate stream
    keyed on the group's name, so a group's row of rates does not change
    when other groups are added or removed.
    """
    if partition.n_groups == 0:
        raise DataError("partition has no groups")
    if min_group_size < 1:
        raise ConfigError(f"min_group_size must be >= 1, got {min_group_size}")
    table = group_means(matrix, partition, stat)
    run_spec = spec.with_seed()
    k = matrix.k
    notes = list(matrix.warnings) + list(partition.warnings)
    for level, size in zip(partition.levels, partition.sizes):
        if size < min_group_size:
            notes.append(small_group_warning(level, size, min_group_size))

    rates = np.zeros((partition.n_groups, k))
    top_sets = {}
    for g, (level, idx) in enumerate(zip(partition.levels, partition.index_sets)):
        observed = table.means[g]
        if np.isnan(observed).all():
            raise DataError(f"group {level!r} has no non-missing responses")
        tops = [top_i_set(observed, i, decreasing) for i in range(1, k + 1)]
        top_sets[level] = tuple(t.indices for t in tops)
        counts, undefined = _containment_counts(
            matrix.values[idx],
            [t.as_set() for t in tops],
            run_spec,
            stat,
            decreasing,
            worker_count,
            level=level,
            stream_key=group_stream_key(level),
        )
        rates[g] = (spec.n_boot - counts) / spec.n_boot
        if undefined:
            notes.append(_undefined_warning(undefined, spec.n_boot, f"group {level!r}"))
    rates.setflags(write=False)

    return SbtReport(
        mean_table=table,
        noncontainment=NonContainmentMatrix(
            partition.levels, tuple(f"top_{i}" for i in range(1, k + 1)), rates
        ),
        group_sizes=dict(zip(partition.levels, partition.sizes)),
        warnings=tuple(dict.fromkeys(notes)),
        n_boot=spec.n_boot,
        seed=spec.seed,
        top_sets=top_sets,
        excluded_rows=partition.excluded,
    )


def split_event(ordered_means, split: int):
    """min of the first ``split`` means strictly exceeds max of the rest.

    ``ordered_means`` is 1-D, or 2-D with one replicate per row.
    """
    m = np.asarray(ordered_means, dtype=float)
    return strictly_greater(m[..., :split].min(axis=-1), m[..., split:].max(axis=-1))


def chain_event(ordered_means):
    """Means form a strictly decreasing chain (row-wise for 2-D input)."""
    m = np.asarray(ordered_means, dtype=float)
    out = np.all(strictly_greater(m[..., :-1], m[..., 1:]), axis=-1)
    return bool(out) if out.ndim == 0 else out


def _ordering_test(
    matrix: ResponseMatrix,
    partition: GroupPartition,
    spec: ResampleSpec,
    worker_count: int,
    column: int,
    stat: SummaryStatistic,
    split: int | str,
    event: Callable[[Sequence[float]], bool],
) -> OrderingTestResult:
    if not 0 <= column < matrix.k:
        raise ConfigError(f"column {column} out of range [0, {matrix.k})")
    if partition.n_rows != matrix.n:
        raise DataError(
            f"partition covers {partition.n_rows} rows but the matrix has {matrix.n}"
        )
    scores = matrix.values[:, column : column + 1]
    observed = np.array([stat.columns(scores[idx])[0] for idx in partition.index_sets])
    empty = [lev for lev, m in zip(partition.levels, observed) if np.isnan(m)]
    if empty:
        raise DataError(
            f"no non-missing {matrix.item_names[column]!r} values in group(s) {empty}"
        )
    order = rank_items(observed, decreasing=True)

    def consumer(draws):
        means = np.column_stack([
            stat.columns(scores[np.stack([d.per_stratum_rows[g] for d in draws]), 0].T)
            for g in order
        ])
        undefined = np.isnan(means).any(axis=1)
        hits = np.asarray(event(means)) & ~undefined
        return np.array([hits.sum(), undefined.sum()], dtype=np.int64)

    run_spec = spec.with_seed()
    largest = max(
        run_spec.effective_size(level, size)
        for level, size in zip(partition.levels, partition.sizes)
    )
    events, undefined = run_replicates(
        partition, run_spec, worker_count, consumer, initial=np.zeros(2, dtype=np.int64),
        batched=True, chunk_size=chunk_size_for(largest, partition.n_groups),
    )
    notes = list(partition.warnings)
    if undefined:
        notes.append(
            f"{undefined} of {spec.n_boot} replicate(s) had a group with no defined "
            "mean and were counted as non-events"
        )
    return OrderingTestResult(
        group_order=tuple(partition.levels[g] for g in order),
        observed_means=tuple(float(observed[g]) for g in order),
        split=split,
        n_boot=spec.n_boot,
        event_count=int(events),
        seed=spec.seed,
        group_sizes={partition.levels[g]: partition.sizes[g] for g in order},
        item=matrix.item_names[column],
        undefined_replicates=int(undefined),
        warnings=tuple(dict.fromkeys(notes)),
    )


def ordering_split_test(
    matrix: ResponseMatrix,
    partition: GroupPartition,
    split: int,
    spec: ResampleSpec = ResampleSpec(n_boot=10_000),
    worker_count: int = 1,
    column: int = 0,
    stat: SummaryStatistic = MEAN,
) -> OrderingTestResult:
    """Bootstrap probability that the top ``split`` groups stay strictly above the rest.

    Groups are ranked by their observed mean of ``column`` (ties keep level
    order). In each replicate every group is resampled within itself and the
    event ``min(first split) > max(remaining)`` is checked with strict
    inequality; ties count against the event.
    """
    G = partition.n_groups
    if G < 2:
        raise ConfigError(f"ordering tests need at least 2 groups, got {G}")
    if isinstance(split, bool) or not isinstance(split, (int, np.integer)) or not 1 <= split <= G - 1:
        raise ConfigError(f"split must be an integer in [1, {G - 1}], got {split!r}")
    split = int(split)
    return _ordering_test(
        matrix, partition, spec, worker_count, column, stat, split,
        lambda means: split_event(means, split),
    )


def total_ordering_test(
    matrix: ResponseMatrix,
    partition: GroupPartition,
    spec: ResampleSpec = ResampleSpec(n_boot=10_000),
    worker_count: int = 1,
    column: int = 0,
    stat: SummaryStatistic = MEAN,
) -> OrderingTestResult:
    """Bootstrap probability that the observed strict ranking of all groups holds."""
    G = partition.n_groups
    if G < 2:
        raise ConfigError(f"ordering tests need at least 2 groups, got {G}")
    return _ordering_test(
        matrix, partition, spec, worker_count, column, stat, TOTAL, chain_event
    )
