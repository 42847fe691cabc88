"""Benchmark report emission (CSV / JSON) with a stable column set."""

from __future__ import annotations

import csv
import io
import json

from .pipeline import EvaluationReport

__all__ = ["REPORT_COLUMNS", "emit_report"]

REPORT_COLUMNS = (
    "strategy",
    "n_users",
    "compliance_probability",
    "mean_utility",
    "latency_p50_ms",
    "latency_p95_ms",
    "latency_p99_ms",
    "latency_max_ms",
)


def _row_dict(row) -> dict:
    return {
        "strategy": row.strategy.value,
        "n_users": row.n_users,
        "compliance_probability": row.compliance_probability,
        "mean_utility": row.mean_utility,
        "latency_p50_ms": row.latency_p50_ms,
        "latency_p95_ms": row.latency_p95_ms,
        "latency_p99_ms": row.latency_p99_ms,
        "latency_max_ms": row.latency_max_ms,
    }


def emit_report(report: EvaluationReport, format: str = "csv") -> str:
    """Render an evaluation report; columns are fixed in REPORT_COLUMNS order."""
    rows = [_row_dict(r) for r in report.rows]
    if format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    if format == "json":
        doc = {
            "repeats": report.repeats,
            "rows": rows,
            "failures": [
                {"user_id": u, "strategy": s, "error": e} for u, s, e in report.failures
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown report format: {format!r}")
