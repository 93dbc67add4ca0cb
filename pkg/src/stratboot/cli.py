"""
Command-line front end.

    stratboot sbt --input survey.csv --group-col gender --levels Woman,Man \
        --responses Q1,Q2,Q3 --type likert --n-boot 500 --seed 123

    stratboot ordering --input scores.csv --group-col arm --split 1 --seed 7

Exit codes: 0 success (warnings go to stderr), 2 bad configuration,
3 bad data, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, SBTError
from .inference import get_sbt, ordering_split_test, total_ordering_test
from .ingest import (
    DEFAULT_MISSING_TOKENS,
    RESPONSE_TYPES,
    ResponseMatrix,
    load_likert_map,
    map_responses,
    normalize_response,
    parse_table,
    partition_groups,
)
from .report import FORMATS, emit_report, ordering_csv, sbt_csv_tables
from .resample import ResampleSpec
from .summary import STATISTICS, SummaryStatistic

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_IO = 0, 2, 3, 4
RECOMMENDED_N_BOOT = 10_000


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _csv_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    data = common.add_argument_group("input")
    data.add_argument("--input", required=True, help="delimited UTF-8 text file")
    data.add_argument("--delimiter", default=",", help="field delimiter (default ',')")
    data.add_argument("--no-header", action="store_true",
                      help="first row is data; columns are named col_1..col_k")
    data.add_argument("--group-col", required=True, help="column holding the group label")
    data.add_argument("--levels", type=_csv_list,
                      help="comma-separated group levels, in group order "
                           "(default: labels in order of first appearance)")
    data.add_argument("--responses", type=_csv_list,
                      help="comma-separated response columns (default: all but the group column)")
    data.add_argument("--type", dest="response_type", choices=RESPONSE_TYPES, default="likert")
    data.add_argument("--likert-map", type=Path, help="file of 'token = score' lines")
    data.add_argument("--missing-tokens", type=lambda s: [t.strip() for t in s.split(",")],
                      help="comma-separated tokens treated as missing (default: '', NA, N/A)")

    boot = common.add_argument_group("resampling")
    boot.add_argument("--n-boot", type=_positive_int, default=1000)
    boot.add_argument("--seed", type=int, help="master seed; results are reproducible when set")
    boot.add_argument("--sample-size", type=_positive_int,
                      help="rows drawn per group (default: the group's size)")
    boot.add_argument("--no-replace", action="store_true", help="resample without replacement")
    boot.add_argument("--statistic", choices=STATISTICS, default="mean")
    boot.add_argument("--keep-na", action="store_true",
                      help="do not drop missing values (a missing cell makes its statistic undefined)")
    boot.add_argument("--min-group-size", type=_positive_int, default=3)
    boot.add_argument("--workers", type=_positive_int, default=1)

    out = common.add_argument_group("output")
    out.add_argument("--format", choices=FORMATS, default="json")
    out.add_argument("--out", type=Path,
                     help="output path (csv format writes PATH.means.csv and PATH.sbt.csv)")

    parser = argparse.ArgumentParser(
        prog="stratboot",
        description="Stratified bootstrap ranking-stability and ordering tests for grouped survey data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sbt = sub.add_parser("sbt", parents=[common],
                         help="group mean table and top-i non-containment matrix")
    sbt.add_argument("--ascending", action="store_true", help="rank items smallest-first")

    order = sub.add_parser("ordering", parents=[common],
                           help="bootstrap probability of the observed group ordering")
    which = order.add_mutually_exclusive_group(required=True)
    which.add_argument("--split", type=int, metavar="G",
                       help="test min(first G groups) > max(remaining groups)")
    which.add_argument("--total", action="store_true", help="test the strict total order")
    score = order.add_mutually_exclusive_group()
    score.add_argument("--score-column", help="single response column to test")
    score.add_argument("--row-mean", action="store_true",
                       help="test the per-respondent mean of the response columns")
    score.add_argument("--per-item", action="store_true",
                       help="run the test separately for every response column (no multiplicity correction)")
    order.add_argument("--adjusted", action="store_true",
                       help="also report (count + 1) / (B + 1)")
    return parser


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _load(args):
    raw = args.input.read_bytes() if isinstance(args.input, Path) else Path(args.input).read_bytes()
    table = parse_table(raw, delimiter=args.delimiter, has_header=not args.no_header)
    group_col = table.column_index(args.group_col)
    if args.responses:
        responses = args.responses
    elif getattr(args, "score_column", None):
        responses = [args.score_column]
    else:
        responses = [h for j, h in enumerate(table.headers) if j != group_col]
    if table.headers[group_col] in [r.strip() for r in responses]:
        raise ConfigError(f"--group-col {args.group_col!r} is also listed as a response column")
    likert_map = load_likert_map(args.likert_map) if args.likert_map else None
    missing = args.missing_tokens if args.missing_tokens is not None else DEFAULT_MISSING_TOKENS
    matrix = map_responses(table, responses, args.response_type, likert_map, missing)
    cells = table.column(args.group_col)
    levels = args.levels
    if not levels:
        first_seen = {}
        for cell in cells:
            if cell.strip():
                first_seen.setdefault(normalize_response(cell), cell.strip())
        levels = list(first_seen.values())
    partition = partition_groups(cells, levels, args.min_group_size)
    return matrix, partition


def _spec(args) -> ResampleSpec:
    return ResampleSpec(
        n_boot=args.n_boot, sample_size=args.sample_size,
        replace=not args.no_replace, seed=args.seed,
    )


def _params(args) -> dict:
    return {
        "response_type": args.response_type,
        "statistic": args.statistic,
        "na_rm": not args.keep_na,
        "replace": not args.no_replace,
        "sample_size": args.sample_size,
    }


def cmd_sbt(args) -> tuple[dict[str, bytes], list[str]]:
    matrix, partition = _load(args)
    report = get_sbt(
        matrix, partition, _spec(args),
        SummaryStatistic(args.statistic, na_rm=not args.keep_na),
        decreasing=not args.ascending,
        min_group_size=args.min_group_size,
        worker_count=args.workers,
    )
    params = _params(args) | {"decreasing": not args.ascending}
    if args.format == "csv" and args.out:
        outputs = {f".{name}.csv": body for name, body in sbt_csv_tables(report).items()}
    else:
        outputs = {"": emit_report(report, args.format, params)}
    return outputs, list(report.warnings)


def _score_matrix(args, matrix: ResponseMatrix) -> tuple[ResponseMatrix, list[int]]:
    if args.per_item:
        return matrix, list(range(matrix.k))
    if args.score_column:
        name = args.score_column.strip()
        if name not in matrix.item_names:
            raise ConfigError(f"--score-column {name!r} is not among the response columns")
        return matrix, [matrix.item_names.index(name)]
    if args.row_mean:
        values = matrix.values
        count = (~np.isnan(values)).sum(axis=1)
        total = np.where(np.isnan(values), 0.0, values).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            score = np.where(count > 0, total / np.maximum(count, 1), np.nan)
        return ResponseMatrix(score[:, None], ("row_mean",), matrix.warnings), [0]
    if matrix.k == 1:
        return matrix, [0]
    raise ConfigError(
        f"{matrix.k} response columns selected; ordering needs --score-column, "
        "--row-mean or --per-item"
    )


def cmd_ordering(args) -> tuple[dict[str, bytes], list[str]]:
    matrix, partition = _load(args)
    G = partition.n_groups
    if G < 2:
        raise ConfigError(f"ordering tests need at least 2 groups, found {G}")
    if not args.total and not 1 <= args.split <= G - 1:
        raise ConfigError(f"--split must be in [1, {G - 1}] for {G} groups, got {args.split}")
    matrix, columns = _score_matrix(args, matrix)
    spec = _spec(args)
    stat = SummaryStatistic(args.statistic, na_rm=not args.keep_na)
    results = []
    for column in columns:
        if args.total:
            result = total_ordering_test(matrix, partition, spec, args.workers, column, stat)
        else:
            result = ordering_split_test(matrix, partition, args.split, spec, args.workers, column, stat)
        results.append(result)

    notes = list(matrix.warnings)
    for r in results:
        notes.extend(r.warnings)
        if spec.n_boot < RECOMMENDED_N_BOOT and (0 < r.p_hat < 0.1 or 0.9 < r.p_hat < 1):
            notes.append(
                f"hint: p_hat={r.p_hat:.6g} for {r.item!r} is near 0 or 1; "
                f"consider --n-boot {RECOMMENDED_N_BOOT} for a more stable estimate"
            )
    params = _params(args) | {"score": "row_mean" if args.row_mean else (
        "per_item" if args.per_item else matrix.item_names[columns[0]])}
    if args.format == "csv":
        body = ordering_csv(results, args.adjusted)
    else:
        body = emit_report(results, args.format, params, adjusted=args.adjusted)
    return {".ordering.csv" if args.format == "csv" and args.out else "": body}, notes


def _write(outputs: dict[str, bytes], out: Path | None) -> None:
    if out is None:
        for body in outputs.values():
            sys.stdout.buffer.write(body)
        sys.stdout.flush()
        return
    for suffix, body in outputs.items():
        Path(f"{out}{suffix}").write_bytes(body)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = cmd_sbt if args.command == "sbt" else cmd_ordering
    try:
        outputs, notes = command(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SBTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    for note in dict.fromkeys(notes):
        if note.startswith("hint: "):
            print(note, file=sys.stderr)
        else:
            _warn(note)
    try:
        _write(outputs, args.out)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
