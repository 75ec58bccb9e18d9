"""
Sweep outputs: report.csv, curves.csv and meta.json.

Numbers are formatted without locale: '.' decimal point, scientific notation
below 1e-3. Wall times go to report.csv only when timing is requested, so two
runs with the same seed and config produce byte-identical CSVs.
"""

from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import Dict

import psutil

from ..core.io import PathLike, dumps, write_atomic
from .sweep import ErrorReport

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "policy", "param", "method", "N_b", "fraction", "max_abs", "max_rel",
    "sigma_prior_mass", "exact_engine", "wall_ms", "failures", "rel_skipped",
]
CURVE_COLUMNS = ["policy", "param", "method", "n_positive", "n_evidence", "max_abs", "max_rel"]


def format_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, int)):
        return str(int(value))
    value = float(value)
    if value == 0.0:
        return "0"
    if abs(value) < 1e-3:
        return f"{value:.6e}"
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return f"{value:.6f}"


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _peak_rss_bytes() -> int:
    info = psutil.Process().memory_info()
    # peak working set where the platform reports it (Windows), resident size otherwise
    return int(getattr(info, "peak_wset", info.rss))


def emit_report(report: ErrorReport, directory: PathLike, timing: bool = False) -> Dict[str, Path]:
    out = Path(directory)
    report_rows = [
        {
            "policy": r.policy,
            "param": format_number(r.param),
            "method": r.method,
            "N_b": r.n_base,
            "fraction": format_number(r.fraction),
            "max_abs": format_number(r.max_abs_error),
            "max_rel": format_number(r.max_rel_error),
            "sigma_prior_mass": format_number(r.sigma_prior_mass),
            "exact_engine": report.exact_engine,
            "wall_ms": f"{r.wall_ms:.1f}" if timing else "",
            "failures": r.failures,
            "rel_skipped": r.rel_skipped,
        }
        for r in report.rows
    ]
    curve_rows = [
        {
            "policy": c.policy,
            "param": format_number(c.param),
            "method": c.method,
            "n_positive": c.n_positive,
            "n_evidence": c.n_evidence,
            "max_abs": format_number(c.max_abs_error),
            "max_rel": format_number(c.max_rel_error),
        }
        for c in report.curves
    ]
    process = psutil.Process()
    meta = {
        "provenance": report.provenance,
        "n_evidence": report.n_evidence,
        "exact_skipped": report.exact_skipped,
        "rows": [r.to_dict() for r in report.rows],
        "runtime": {
            "wall_ms": report.runtime,
            "peak_rss_bytes": _peak_rss_bytes(),
            "cpu_seconds": sum(process.cpu_times()[:2]),
        },
    }

    paths = {
        "report": write_atomic(out / "report.csv", _csv_text(REPORT_COLUMNS, report_rows)),
        "curves": write_atomic(out / "curves.csv", _csv_text(CURVE_COLUMNS, curve_rows)),
        "meta": write_atomic(out / "meta.json", dumps(meta)),
    }
    logger.info("wrote %d report rows and %d curve points to %s", len(report_rows), len(curve_rows), out)
    return paths

