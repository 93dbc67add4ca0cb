"""
Stratified bootstrap engine.

Every replicate owns a Philox stream keyed on ``(master_seed, stream_key)``
with the replicate index in the high counter word, so each replicate's draws
are a pure function of ``(master_seed, stream_key, replicate_index)``. This
is what makes results independent of how replicates are scheduled across
workers.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, TypeVar

import numpy as np

from .errors import ConfigError, SBTError
from .ingest import GroupPartition

_MASK64 = (1 << 64) - 1

# Replicates are folded in fixed-size chunks, in index order, whatever the
# worker count. Keeps even floating-point folds bit-identical.
CHUNK_SIZE = 256

T = TypeVar("T")


class ReplicateError(SBTError):
    """A consumer raised; ``replicate_index`` is the failing replicate (or
    the first replicate of the failing batch)."""

    def __init__(self, replicate_index: int, cause: BaseException):
        super().__init__(f"replicate {replicate_index} failed: {cause}")
        self.replicate_index = replicate_index


@dataclass(frozen=True)
class ResampleSpec:
    """How to resample each stratum.

    ``sample_size`` is a single size applied to every stratum, or a mapping
    from group level to size; unset strata keep their own size.
    """

    n_boot: int = 1000
    sample_size: int | Mapping[str, int] | None = None
    replace: bool = True
    seed: int | None = None

    def __post_init__(self):
        if isinstance(self.n_boot, bool) or not isinstance(self.n_boot, (int, np.integer)):
            raise ConfigError(f"n_boot must be an integer, got {self.n_boot!r}")
        if self.n_boot < 1:
            raise ConfigError(f"n_boot must be >= 1, got {self.n_boot}")
        sizes = (
            self.sample_size.values()
            if isinstance(self.sample_size, Mapping)
            else [] if self.sample_size is None else [self.sample_size]
        )
        for size in sizes:
            if isinstance(size, bool) or not isinstance(size, (int, np.integer)) or size < 1:
                raise ConfigError(f"sample_size must be a positive integer, got {size!r}")
        if self.seed is not None and (
            isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer))
        ):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")

    def effective_size(self, level: str, stratum_size: int) -> int:
        if self.sample_size is None:
            size = stratum_size
        elif isinstance(self.sample_size, Mapping):
            size = self.sample_size.get(level, stratum_size)
        else:
            size = self.sample_size
        if not self.replace and size > stratum_size:
            raise ConfigError(
                f"sample_size {size} exceeds the {stratum_size} rows of group {level!r} "
                "when sampling without replacement"
            )
        return int(size)

    def with_seed(self) -> ResampleSpec:
        """Copy with a concrete seed (fresh entropy when unset)."""
        if self.seed is not None:
            return self
        return dataclasses.replace(self, seed=fresh_seed())


@dataclass(frozen=True)
class ReplicateDraw:
    replicate_index: int
    per_stratum_rows: tuple[np.ndarray, ...]


def fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy) & _MASK64


def derive_stream(
    master_seed: int | None, replicate_index: int, stream_key: int = 0
) -> np.random.Generator:
    """Generator for one replicate; entropy-seeded when ``master_seed`` is None."""
    if replicate_index < 0:
        raise ConfigError(f"replicate_index must be >= 0, got {replicate_index}")
    if master_seed is None:
        return np.random.default_rng()
    key = np.array([int(master_seed) & _MASK64, int(stream_key) & _MASK64], dtype=np.uint64)
    counter = np.array([0, int(replicate_index) & _MASK64, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def draw_replicate(
    partition: GroupPartition,
    spec: ResampleSpec,
    replicate_index: int,
    stream_key: int = 0,
) -> ReplicateDraw:
    if not 0 <= replicate_index < spec.n_boot:
        raise ConfigError(f"replicate_index {replicate_index} outside [0, {spec.n_boot})")
    sizes = [
        spec.effective_size(level, idx.size)
        for level, idx in zip(partition.levels, partition.index_sets)
    ]
    return _draw(partition.index_sets, sizes, spec, replicate_index, stream_key)


def _draw(index_sets, sizes, spec, replicate_index, stream_key):
    rng = derive_stream(spec.seed, replicate_index, stream_key)
    rows = []
    for idx, size in zip(index_sets, sizes):
        if spec.replace:
            pos = rng.integers(0, idx.size, size=size)
        else:
            pos = rng.choice(idx.size, size=size, replace=False, shuffle=True)
        rows.append(idx[pos])
    return ReplicateDraw(replicate_index, tuple(rows))


def chunk_size_for(rows_per_replicate: int, width: int = 1) -> int:
    """Replicates per batch, capped so one batch stays around 32 MB of floats."""
    per = max(1, rows_per_replicate * width)
    return max(1, min(CHUNK_SIZE, (1 << 22) // per))


def run_replicates(
    partition: GroupPartition,
    spec: ResampleSpec,
    worker_count: int,
    consumer: Callable[[ReplicateDraw], T],
    stream_key: int = 0,
    initial=0,
    batched: bool = False,
    chunk_size: int = CHUNK_SIZE,
):
    """Fold ``consumer`` over all ``spec.n_boot`` replicate draws with ``+``.

    The consumer must be a pure function of its input; contributions should
    be integer-valued (counts, integer arrays) so the sum is exact. With
    ``batched`` the consumer receives a list of consecutive draws and returns
    their combined contribution. Replicates are grouped into chunks of
    ``chunk_size`` that do not depend on ``worker_count``, so neither does
    the result.
    """
    if isinstance(worker_count, bool) or not isinstance(worker_count, (int, np.integer)):
        raise ConfigError(f"worker_count must be an integer, got {worker_count!r}")
    if worker_count < 1:
        raise ConfigError(f"worker_count must be >= 1, got {worker_count}")
    if chunk_size < 1:
        raise ConfigError(f"chunk_size must be >= 1, got {chunk_size}")
    spec = spec.with_seed()
    sizes = [
        spec.effective_size(level, idx.size)
        for level, idx in zip(partition.levels, partition.index_sets)
    ]

    def run_chunk(start):
        stop = min(start + chunk_size, spec.n_boot)
        draws = (_draw(partition.index_sets, sizes, spec, b, stream_key) for b in range(start, stop))
        if batched:
            try:
                return consumer(list(draws))
            except Exception as exc:
                raise ReplicateError(start, exc) from exc
        acc = initial
        for draw in draws:
            try:
                acc = acc + consumer(draw)
            except Exception as exc:
                raise ReplicateError(draw.replicate_index, exc) from exc
        return acc

    starts = range(0, spec.n_boot, chunk_size)
    if worker_count == 1 or len(starts) == 1:
        partials = [run_chunk(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=int(worker_count)) as pool:
            partials = list(pool.map(run_chunk, starts))
    total = initial
    for part in partials:
        total = total + part
    return total
