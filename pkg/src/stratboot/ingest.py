"""
Reading delimited survey exports and turning them into numeric matrices.

The pipeline is ``parse_table`` -> ``map_responses`` (+ ``partition_groups``
on the grouping column). Textual answers are cleaned with
``normalize_response`` before any lookup, so "Agree", " agree " and "AGREE"
all hit the same Likert entry.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, MappingError, ParseError

RESPONSE_TYPES = ("likert", "binary", "numeric")

DEFAULT_LIKERT_MAP = {
    "strongly disagree": 1.0,
    "disagree": 2.0,
    "neutral": 3.0,
    "neither agree nor disagree": 3.0,
    "agree": 4.0,
    "strongly agree": 5.0,
}

DEFAULT_BINARY_MAP = {
    "yes": 1.0,
    "true": 1.0,
    "1": 1.0,
    "no": 0.0,
    "false": 0.0,
    "0": 0.0,
}

DEFAULT_MISSING_TOKENS = frozenset({"", "na", "n/a"})


@dataclass(frozen=True)
class RawTable:
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    # physical line number of each data row, for error messages
    line_numbers: tuple[int, ...] = ()

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.headers)

    def column_index(self, name: str) -> int:
        try:
            return self.headers.index(name.strip())
        except ValueError:
            raise ConfigError(
                f"column {name!r} not found; available: {', '.join(self.headers)}"
            ) from None

    def column(self, name: str) -> list[str]:
        j = self.column_index(name)
        return [row[j] for row in self.rows]

    def line_of(self, row: int) -> int:
        return self.line_numbers[row] if self.line_numbers else row + 1


@dataclass(frozen=True)
class ResponseMatrix:
    """n x k float array; missing cells are NaN."""

    values: np.ndarray
    item_names: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise DataError(f"response matrix must be 2-D, got shape {values.shape}")
        n, k = values.shape
        if n < 1 or k < 1:
            raise DataError(f"response matrix must be non-empty, got shape {values.shape}")
        if np.isinf(values).any():
            raise DataError("response matrix contains non-finite values")
        if len(self.item_names) != k:
            raise DataError(f"{len(self.item_names)} item names for {k} columns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "item_names", tuple(self.item_names))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @classmethod
    def from_array(cls, values, item_names: Sequence[str] | None = None) -> ResponseMatrix:
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if item_names is None:
            item_names = [f"item_{j + 1}" for j in range(values.shape[1])]
        return cls(values, tuple(item_names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def select(self, columns: Sequence[int]) -> ResponseMatrix:
        columns = list(columns)
        return ResponseMatrix(
            self.values[:, columns],
            tuple(self.item_names[j] for j in columns),
            self.warnings,
        )

    def rows(self, index) -> ResponseMatrix:
        return ResponseMatrix(self.values[index], self.item_names, self.warnings)


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint row-index sets, one per retained group level."""

    levels: tuple[str, ...]
    index_sets: tuple[np.ndarray, ...]
    n_rows: int
    excluded: int = 0
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.levels) != len(self.index_sets):
            raise DataError("levels and index_sets differ in length")
        seen = np.zeros(self.n_rows, dtype=bool)
        sets = []
        for level, idx in zip(self.levels, self.index_sets):
            idx = np.array(idx, dtype=np.intp, copy=True)
            if idx.size == 0:
                raise DataError(f"group {level!r} is empty")
            if idx.min() < 0 or idx.max() >= self.n_rows:
                raise DataError(f"group {level!r} has row indices outside [0, {self.n_rows})")
            if seen[idx].any() or np.unique(idx).size != idx.size:
                raise DataError(f"group {level!r} overlaps another group")
            seen[idx] = True
            idx.setflags(write=False)
            sets.append(idx)
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "index_sets", tuple(sets))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @classmethod
    def from_labels(cls, labels: Sequence, levels: Sequence | None = None) -> GroupPartition:
        """Exact-match partition, for library callers with clean labels."""
        labels = list(labels)
        if levels is None:
            levels = list(dict.fromkeys(labels))
        index_sets = [np.flatnonzero([lab == lev for lab in labels]) for lev in levels]
        kept = [(str(lev), idx) for lev, idx in zip(levels, index_sets) if idx.size]
        return cls(
            tuple(lev for lev, _ in kept),
            tuple(idx for _, idx in kept),
            n_rows=len(labels),
            excluded=len(labels) - sum(idx.size for _, idx in kept),
        )

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(int(idx.size) for idx in self.index_sets)

    @property
    def n_groups(self) -> int:
        return len(self.levels)


def parse_table(source, delimiter: str = ",", has_header: bool = True) -> RawTable:
    """Parse delimited text into a rectangular ``RawTable``.

    ``source`` may be bytes, str, a path or a binary/text file object.
    Blank lines are skipped. Every remaining record must have as many cells
    as the first one.
    """
    if len(delimiter) != 1:
        raise ConfigError(f"delimiter must be a single character, got {delimiter!r}")
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter)
    records = []
    try:
        for cells in reader:
            if not cells:
                continue
            records.append((reader.line_num, cells))
    except csv.Error as exc:
        raise ParseError(f"line {reader.line_num}: {exc}", line=reader.line_num) from None
    if not records:
        raise ParseError("input is empty")

    width = len(records[0][1])
    for line, cells in records:
        if len(cells) != width:
            raise ParseError(
                f"row {line} has {len(cells)} cells, expected {width}", line=line
            )

    if has_header:
        headers = tuple(h.strip() for h in records[0][1])
        records = records[1:]
        dupes = sorted({h for h in headers if headers.count(h) > 1})
        if dupes:
            raise ParseError(f"duplicate column names: {', '.join(dupes)}", line=1)
    else:
        headers = tuple(f"col_{j + 1}" for j in range(width))
    return RawTable(
        headers=headers,
        rows=tuple(tuple(cells) for _, cells in records),
        line_numbers=tuple(line for line, _ in records),
    )


def _read_text(source) -> str:
    if isinstance(source, Path):
        source = source.read_bytes()
    elif hasattr(source, "read"):
        source = source.read()
    if isinstance(source, (bytes, bytearray)):
        try:
            return bytes(source).decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from None
    if isinstance(source, str):
        return source
    raise TypeError(f"cannot read table from {type(source).__name__}")


def normalize_response(cell: str) -> str:
    """Lowercase, trim, and collapse interior whitespace runs."""
    return " ".join(cell.split()).lower()


def load_likert_map(source) -> dict[str, float]:
    """Read a ``token = score`` file. ``#`` starts a comment."""
    text = _read_text(Path(source) if isinstance(source, str) else source)
    mapping: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        token, sep, score = line.rpartition("=")
        if not sep:
            raise ParseError(f"likert map line {lineno}: expected 'token = score'", line=lineno)
        mapping_key = token
        try:
            value = float(score)
        except ValueError:
            raise ParseError(
                f"likert map line {lineno}: score {score.strip()!r} is not a number", line=lineno
            ) from None
        _add_map_entry(mapping, mapping_key, value, where=f"likert map line {lineno}")
    if not mapping:
        raise ParseError("likert map is empty")
    return mapping


def make_likert_map(entries: Mapping[str, float]) -> dict[str, float]:
    """Normalize keys of a user-supplied map, rejecting collisions."""
    mapping: dict[str, float] = {}
    for token, score in entries.items():
        _add_map_entry(mapping, token, score, where="likert map")
    return mapping


def _add_map_entry(mapping, token, score, where):
    key = normalize_response(str(token))
    score = float(score)
    if not math.isfinite(score):
        raise ConfigError(f"{where}: score for {key!r} is not finite")
    if key in mapping:
        raise ConfigError(f"{where}: token {key!r} defined twice (after normalization)")
    mapping[key] = score


def _parse_number(text: str) -> float | None:
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def map_responses(
    table: RawTable,
    response_columns: Sequence[str],
    response_type: str = "likert",
    likert_map: Mapping[str, float] | None = None,
    missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS,
) -> ResponseMatrix:
    """Convert the selected text columns into a ``ResponseMatrix``.

    Parameters
    ----------
    table : RawTable
    response_columns : sequence of str
        Column names, in the order the items should appear.
    response_type : {'likert', 'binary', 'numeric'}
        'likert' looks normalized cells up in ``likert_map`` (default: the
        5-point agree/disagree scale); numerals pass through unchanged, with
        a warning when outside [1, 5]. 'binary' maps yes/true/1 and
        no/false/0. 'numeric' parses every cell as a real number.
    likert_map : mapping, optional
        Replaces the default lookup table for 'likert' and 'binary'.
    missing_tokens : iterable of str
        Cells equal to one of these (after normalization) become NaN.

    Returns
    -------
    ResponseMatrix
        Same row count as ``table``; ``warnings`` lists all-missing columns
        and out-of-scale numerals.
    """
    if response_type not in RESPONSE_TYPES:
        raise ConfigError(
            f"response_type must be one of {', '.join(RESPONSE_TYPES)}, got {response_type!r}"
        )
    if not response_columns:
        raise ConfigError("no response columns selected")
    if table.n_rows == 0:
        raise DataError("table has no data rows")
    missing = {normalize_response(t) for t in missing_tokens}
    if likert_map is not None:
        lookup = make_likert_map(likert_map)
    elif response_type == "binary":
        lookup = DEFAULT_BINARY_MAP
    else:
        lookup = DEFAULT_LIKERT_MAP

    columns = [table.column_index(name) for name in response_columns]
    values = np.full((table.n_rows, len(columns)), np.nan)
    warnings = []
    for out_j, j in enumerate(columns):
        name = table.headers[j]
        off_scale = 0
        for r, row in enumerate(table.rows):
            cell = normalize_response(row[j])
            if cell in missing:
                continue
            if response_type == "numeric":
                value = _parse_number(cell)
            else:
                value = lookup.get(cell)
                if value is None and response_type == "likert":
                    value = _parse_number(cell)
                    if value is not None and not 1.0 <= value <= 5.0:
                        off_scale += 1
            if value is None:
                raise MappingError(
                    f"cannot map {row[j]!r} in column {name!r}, row {r + 1} "
                    f"(line {table.line_of(r)}) as {response_type}",
                    token=row[j],
                    column=name,
                    row=r + 1,
                )
            values[r, out_j] = value
        if off_scale:
            warnings.append(
                f"column {name!r}: {off_scale} numeric value(s) outside the 1-5 Likert range"
            )
        if np.isnan(values[:, out_j]).all():
            warnings.append(f"column {name!r} is entirely missing")
    return ResponseMatrix(values, tuple(table.headers[j] for j in columns), tuple(warnings))


def small_group_warning(level: str, size: int, min_group_size: int) -> str:
    return (
        f"group {level!r} has only {size} row(s) (< {min_group_size}); "
        "resampling estimates will be noisy"
    )


def partition_groups(
    group_cells: Sequence[str],
    group_levels: Sequence[str],
    min_group_size: int = 3,
) -> GroupPartition:
    """Assign rows to groups by normalized label match.

    Rows matching no level are excluded (and counted). Levels with no rows are
    dropped; levels smaller than ``min_group_size`` are kept but flagged.
    """
    if min_group_size < 1:
        raise ConfigError(f"min_group_size must be >= 1, got {min_group_size}")
    if not group_levels:
        raise ConfigError("no group levels given")
    keys = [normalize_response(str(level)) for level in group_levels]
    if len(set(keys)) != len(keys):
        raise ConfigError(f"duplicate group levels: {list(group_levels)}")

    position = {key: g for g, key in enumerate(keys)}
    members: list[list[int]] = [[] for _ in keys]
    excluded = 0
    for r, cell in enumerate(group_cells):
        g = position.get(normalize_response(str(cell)))
        if g is None:
            excluded += 1
        else:
            members[g].append(r)

    warnings = []
    levels, index_sets = [], []
    for level, rows in zip(group_levels, members):
        if not rows:
            warnings.append(f"group {level!r} has no rows and was dropped")
            continue
        if len(rows) < min_group_size:
            warnings.append(small_group_warning(level, len(rows), min_group_size))
        levels.append(str(level))
        index_sets.append(np.asarray(rows, dtype=np.intp))
    if not levels:
        raise DataError("no rows matched any group level")
    if excluded:
        warnings.append(f"{excluded} row(s) matched no group level and were excluded")
    return GroupPartition(
        tuple(levels), tuple(index_sets), n_rows=len(group_cells), excluded=excluded,
        warnings=tuple(warnings),
    )
