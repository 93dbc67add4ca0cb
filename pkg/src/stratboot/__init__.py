"""Stratified bootstrap tests for ranking stability and ordering of group means."""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, MappingError, ParseError, SBTError, SBTWarning
from .inference import (
    NonContainmentMatrix,
    OrderingTestResult,
    SbtReport,
    get_sbt,
    ordering_split_test,
    single_stratified_bootstrap,
    total_ordering_test,
)
from .ingest import (
    GroupPartition,
    RawTable,
    ResponseMatrix,
    load_likert_map,
    map_responses,
    normalize_response,
    parse_table,
    partition_groups,
)
from .resample import ResampleSpec, derive_stream, draw_replicate, run_replicates
from .summary import MeanTable, SummaryStatistic, TopSet, group_means, rank_items, top_i_set

__all__ = [
    "ConfigError", "DataError", "GroupPartition", "MappingError", "MeanTable",
    "NonContainmentMatrix", "OrderingTestResult", "ParseError", "RawTable",
    "ResampleSpec", "ResponseMatrix", "SBTError", "SBTWarning", "SbtReport",
    "SummaryStatistic", "TopSet", "derive_stream", "draw_replicate", "get_sbt",
    "group_means", "load_likert_map", "map_responses", "normalize_response",
    "ordering_split_test", "parse_table", "partition_groups", "rank_items",
    "run_replicates", "single_stratified_bootstrap", "top_i_set", "total_ordering_test",
]
