"""Serialization of SBT reports and ordering-test results (JSON, CSV, text)."""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Sequence

from .inference import OrderingTestResult, SbtReport

SCHEMA_VERSION = 1
FORMATS = ("json", "csv", "table")
P_HAT_LABEL = "ordering event probability p_hat"


def real(x) -> float | None:
    """Round to 6 significant digits; NaN/None -> None (JSON null)."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    return float(f"{x:.6g}")


def _fmt_cell(x) -> str:
    x = real(x)
    return "" if x is None else f"{x:.6g}"


def sbt_to_dict(report: SbtReport, params: dict | None = None) -> dict:
    table = report.mean_table
    nc = report.noncontainment
    items = list(table.item_names)
    out = {"schema": SCHEMA_VERSION, "command": "sbt"}
    out.update(params or {})
    out.update(
        n_boot=report.n_boot,
        seed=report.seed,
        groups=list(table.group_names),
        items=items,
        group_sizes=dict(report.group_sizes),
        excluded_rows=report.excluded_rows,
        mean_table={
            g: dict(zip(items, map(real, row))) for g, row in zip(table.group_names, table.means)
        },
        noncontainment={
            g: dict(zip(nc.columns, map(real, row))) for g, row in zip(nc.group_names, nc.rates)
        },
        top_sets={
            g: [[items[j] for j in top] for top in tops] for g, tops in report.top_sets.items()
        },
        warnings=list(report.warnings),
    )
    return out


def ordering_to_dict(result: OrderingTestResult, adjusted: bool = False) -> dict:
    out = {
        "item": result.item,
        "split": result.split,
        "group_order": list(result.group_order),
        "observed_means": [real(m) for m in result.observed_means],
        "group_sizes": dict(result.group_sizes),
        "n_boot": result.n_boot,
        "event_count": result.event_count,
        "p_hat": real(result.p_hat),
        "std_error": real(result.std_error),
    }
    if adjusted:
        out["p_hat_adjusted"] = real(result.p_hat_adjusted)
    out["undefined_replicates"] = result.undefined_replicates
    out["warnings"] = list(result.warnings)
    return out


def orderings_to_dict(
    results: Sequence[OrderingTestResult], params: dict | None = None, adjusted: bool = False
) -> dict:
    out = {"schema": SCHEMA_VERSION, "command": "ordering"}
    out.update(params or {})
    out.update(
        quantity=P_HAT_LABEL,
        n_boot=results[0].n_boot if results else None,
        seed=results[0].seed if results else None,
        results=[ordering_to_dict(r, adjusted) for r in results],
    )
    return out


def to_json(payload: dict) -> bytes:
    return (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _csv_bytes(header: Sequence[str], rows: Sequence[Sequence]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def sbt_csv_tables(report: SbtReport) -> dict[str, bytes]:
    """Plot-ready CSV tables keyed by file suffix ('means', 'sbt')."""
    table, nc = report.mean_table, report.noncontainment
    means = _csv_bytes(
        ["group", "n", *table.item_names],
        [
            [g, report.group_sizes[g], *map(_fmt_cell, row)]
            for g, row in zip(table.group_names, table.means)
        ],
    )
    sbt = _csv_bytes(
        ["group", "n", *nc.columns],
        [
            [g, report.group_sizes[g], *map(_fmt_cell, row)]
            for g, row in zip(nc.group_names, nc.rates)
        ],
    )
    return {"means": means, "sbt": sbt}


def ordering_csv(results: Sequence[OrderingTestResult], adjusted: bool = False) -> bytes:
    header = ["item", "split", "group_order", "n_boot", "event_count", "p_hat", "std_error"]
    if adjusted:
        header.append("p_hat_adjusted")
    rows = []
    for r in results:
        row = [
            r.item, r.split, " > ".join(r.group_order), r.n_boot, r.event_count,
            _fmt_cell(r.p_hat), _fmt_cell(r.std_error),
        ]
        if adjusted:
            row.append(_fmt_cell(r.p_hat_adjusted))
        rows.append(row)
    return _csv_bytes(header, rows)


def _aligned(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    lines = []
    for i, row in enumerate([header, *rows]):
        cells = [str(c).ljust(w) if j == 0 else str(c).rjust(w) for j, (c, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return lines


def _fixed(x) -> str:
    return "NA" if x is None or math.isnan(x) else f"{x:.4f}"


def sbt_table_text(report: SbtReport) -> bytes:
    table, nc = report.mean_table, report.noncontainment
    lines = [f"Group means (n_boot={report.n_boot}, seed={report.seed})"]
    lines += _aligned(
        ["group", "n", *table.item_names],
        [
            [g, str(report.group_sizes[g]), *map(_fixed, row)]
            for g, row in zip(table.group_names, table.means)
        ],
    )
    lines += ["", "Non-containment (0 = stable top-i, 1 = never reproduced)"]
    lines += _aligned(
        ["group", *nc.columns],
        [[g, *map(_fixed, row)] for g, row in zip(nc.group_names, nc.rates)],
    )
    if report.excluded_rows:
        lines += ["", f"{report.excluded_rows} row(s) excluded (no matching group level)"]
    return ("\n".join(lines) + "\n").encode("utf-8")


def ordering_table_text(results: Sequence[OrderingTestResult], adjusted: bool = False) -> bytes:
    lines = []
    for r in results:
        if lines:
            lines.append("")
        title = f"Ordering test on {r.item!r}" if r.item else "Ordering test"
        event = "strict total order" if r.split == "total" else f"split after group {r.split}"
        lines.append(f"{title}: {event}")
        lines += _aligned(
            ["rank", "group", "n", "mean"],
            [
                [str(i + 1), g, str(r.group_sizes.get(g, "")), _fixed(m)]
                for i, (g, m) in enumerate(zip(r.group_order, r.observed_means))
            ],
        )
        lines.append(f"{P_HAT_LABEL}: {_fmt_cell(r.p_hat)} ({r.event_count}/{r.n_boot})")
        lines.append(f"binomial standard error: {_fmt_cell(r.std_error)}")
        if adjusted:
            lines.append(f"(count+1)/(B+1): {_fmt_cell(r.p_hat_adjusted)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def emit_report(report, fmt: str = "json", params: dict | None = None, adjusted: bool = False) -> bytes:
    """Serialize an ``SbtReport`` or a list of ``OrderingTestResult``.

    CSV output for an SbtReport concatenates the means and non-containment
    tables with a blank line between them; use ``sbt_csv_tables`` for the
    two tables separately.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(report, OrderingTestResult):
        report = [report]
    if isinstance(report, SbtReport):
        if fmt == "json":
            return to_json(sbt_to_dict(report, params))
        if fmt == "csv":
            tables = sbt_csv_tables(report)
            return tables["means"] + b"\n" + tables["sbt"]
        return sbt_table_text(report)
    if fmt == "json":
        return to_json(orderings_to_dict(report, params, adjusted))
    if fmt == "csv":
        return ordering_csv(report, adjusted)
    return ordering_table_text(report, adjusted)
