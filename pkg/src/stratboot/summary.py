"""
Group-level summaries and ranked top-i item sets.

Means that agree to within a relative ``TIE_RTOL`` are treated as equal.
Arithmetic on translated or rescaled data (e.g. ``x + 7.3``) perturbs
genuinely equal means in the last few bits, and an exact ``==`` would turn
those ties into spurious strict orderings. Ties are broken by ascending item
index; undefined (NaN) entries always sort last.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .ingest import GroupPartition, ResponseMatrix

TIE_RTOL = 1e-9

STATISTICS = ("mean", "median")


@dataclass(frozen=True)
class SummaryStatistic:
    """Column reduction applied to each group's (or resample's) rows.

    ``kind`` is 'mean', 'median' or 'custom'; a custom statistic carries
    ``func``, which receives a 1-D float array and returns one number.
    With ``na_rm`` missing values are dropped first, otherwise any missing
    value makes the result undefined.
    """

    kind: str = "mean"
    na_rm: bool = True
    func: Callable[[np.ndarray], float] | None = None

    def __post_init__(self):
        if self.kind == "custom":
            if self.func is None:
                raise ConfigError("custom statistic needs a func")
        elif self.kind not in STATISTICS:
            raise ConfigError(f"unknown statistic {self.kind!r}")

    @classmethod
    def custom(cls, func, na_rm=True) -> SummaryStatistic:
        return cls("custom", na_rm, func)

    @property
    def name(self) -> str:
        if self.kind == "custom":
            return getattr(self.func, "__name__", "custom")
        return self.kind

    def columns(self, values: np.ndarray) -> np.ndarray:
        """Reduce along axis 0: (rows, cols) -> (cols,), (rows, B, cols) -> (B, cols)."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] == 0:
            return np.full(values.shape[1:], np.nan)
        if self.kind == "mean":
            if not self.na_rm:
                return values.mean(axis=0)
            valid = ~np.isnan(values)
            count = valid.sum(axis=0)
            total = np.where(valid, values, 0.0).sum(axis=0)
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.where(count > 0, total / np.maximum(count, 1), np.nan)
        if self.kind == "median":
            if not self.na_rm:
                return np.median(values, axis=0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                return np.nanmedian(values, axis=0)
        return np.apply_along_axis(self._custom_1d, 0, values)

    def _custom_1d(self, col):
        missing = np.isnan(col)
        if missing.any():
            if not self.na_rm:
                return np.nan
            col = col[~missing]
        return float(self.func(col)) if col.size else np.nan


MEAN = SummaryStatistic()


@dataclass(frozen=True)
class MeanTable:
    group_names: tuple[str, ...]
    item_names: tuple[str, ...]
    means: np.ndarray  # (G, k); NaN where undefined

    def row(self, group: str) -> np.ndarray:
        return self.means[self.group_names.index(group)]


@dataclass(frozen=True)
class TopSet:
    i: int
    indices: tuple[int, ...]

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)


def group_means(
    matrix: ResponseMatrix, partition: GroupPartition, stat: SummaryStatistic = MEAN
) -> MeanTable:
    if partition.n_rows != matrix.n:
        raise DataError(
            f"partition covers {partition.n_rows} rows but the matrix has {matrix.n}"
        )
    means = np.vstack([stat.columns(matrix.values[idx]) for idx in partition.index_sets])
    means.setflags(write=False)
    return MeanTable(partition.levels, matrix.item_names, means)


def _tied(a, b):
    return np.abs(a - b) <= TIE_RTOL * np.maximum(np.abs(a), np.abs(b))


def is_tied(a: float, b: float) -> bool:
    return bool(_tied(a, b))


def strictly_greater(a, b):
    """``a > b`` with near-equal values counted as ties (never greater).

    Works elementwise on arrays; NaN on either side gives False.
    """
    with np.errstate(invalid="ignore"):
        out = (a > b) & ~_tied(a, b)
    return bool(out) if np.ndim(out) == 0 else out


def rank_matrix(means: np.ndarray, decreasing: bool = True) -> np.ndarray:
    """Row-wise ``rank_items`` for a (B, k) array; rows may be all-NaN."""
    m = np.atleast_2d(np.asarray(means, dtype=float))
    rows, k = m.shape
    defined = ~np.isnan(m)
    key = np.where(defined, -m if decreasing else m, np.inf)
    order = np.argsort(key, axis=1, kind="stable")
    srt = np.take_along_axis(m, order, axis=1)
    sdef = np.take_along_axis(defined, order, axis=1)
    with np.errstate(invalid="ignore"):
        same = (sdef[:, 1:] & sdef[:, :-1] & _tied(srt[:, 1:], srt[:, :-1])) | (
            ~sdef[:, 1:] & ~sdef[:, :-1]
        )
    # Chain near-equal neighbours into tie blocks, then order blocks by
    # position and items inside a block by index.
    block_sorted = np.concatenate(
        [np.zeros((rows, 1), dtype=np.intp), np.cumsum(~same, axis=1)], axis=1
    )
    block = np.empty_like(block_sorted)
    np.put_along_axis(block, order, block_sorted, axis=1)
    return np.argsort(block * k + np.arange(k), axis=1, kind="stable")


def rank_items(means: Sequence[float], decreasing: bool = True) -> list[int]:
    """Permutation of item indices ordered by mean.

    >>> rank_items([1.0, 3.0, 2.0])
    [1, 2, 0]
    >>> rank_items([2.0, 2.0, 1.0])
    [0, 1, 2]
    >>> rank_items([1.0, float("nan"), 2.0])
    [2, 0, 1]
    """
    m = np.asarray(means, dtype=float)
    if m.ndim != 1 or m.size == 0:
        raise DataError("rank_items expects a non-empty 1-D sequence")
    if np.isnan(m).all():
        raise DataError("cannot rank items: every summary value is undefined")
    return [int(j) for j in rank_matrix(m[None, :], decreasing)[0]]


def top_i_set(means: Sequence[float], i: int, decreasing: bool = True) -> TopSet:
    k = len(means)
    if not 1 <= i <= k:
        raise ConfigError(f"top-i size must be in [1, {k}], got {i}")
    return TopSet(i, tuple(rank_items(means, decreasing)[:i]))
