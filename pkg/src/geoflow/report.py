"""Scenario reports: check records, series tables and deterministic emission.

Floats are written with 17 significant digits so that every value
round-trips exactly; non-finite values become ``null`` in JSON and
``nan``/``inf``/``-inf`` in CSV.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ScenarioConfig
from .errors import ReportIOError

__all__ = ["CheckRecord", "SeriesTable", "ScenarioReport", "check", "observe", "emit_report", "REPORT_COLUMNS"]

REPORT_COLUMNS = ("scenario", "name", "measured", "expected", "tolerance", "relation", "passed", "provenance")

# relation -> predicate(measured, expected, tolerance)
RELATIONS = {
    "abs": lambda m, e, t: abs(m - e) <= t,
    "rel": lambda m, e, t: abs(m - e) <= t * abs(e),
    "le": lambda m, e, t: m <= e + t,
    "ge": lambda m, e, t: m >= e - t,
    "lt": lambda m, e, t: m < e,
    "gt": lambda m, e, t: m > e,
    "eq": lambda m, e, t: m == e,
}


@dataclass(frozen=True)
class CheckRecord:
    """One measured quantity compared to its expectation.

    ``passed`` is None for observational records, which never affect the
    verdict.
    """

    name: str
    measured: object
    expected: object
    tolerance: float
    relation: str
    passed: Optional[bool]
    provenance: str


@dataclass
class SeriesTable:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"table {self.name} expects {len(self.columns)} columns")
        self.rows.append(tuple(row))


@dataclass
class ScenarioReport:
    scenario: str
    config: ScenarioConfig
    checks: list = field(default_factory=list)
    series: list = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.checks if c.passed is not None)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if c.passed is False]

    def add(self, record: CheckRecord) -> CheckRecord:
        self.checks.append(record)
        return record

    def table(self, name: str, columns: Sequence[str]) -> SeriesTable:
        t = SeriesTable(name, tuple(columns))
        self.series.append(t)
        return t


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def check(name: str, measured, expected, tolerance: float = 0.0, relation: str = "abs", provenance: str = "DERIVED") -> CheckRecord:
    """Record comparing ``measured`` against ``expected`` under ``relation``.

    A non-finite measurement fails.
    """
    m, e = _num(measured), _num(expected)
    if relation not in RELATIONS:
        raise ValueError(f"unknown relation {relation!r}")
    if isinstance(m, float) and not math.isfinite(m):
        ok = False
    else:
        ok = bool(RELATIONS[relation](m, e, tolerance))
    return CheckRecord(name, m, e, float(tolerance), relation, ok, provenance)


def observe(name: str, measured, expected=None, provenance: str = "DERIVED") -> CheckRecord:
    """Observational record: reported but excluded from the verdict."""
    return CheckRecord(name, _num(measured), _num(expected), math.nan, "observation", None, provenance)


def _fmt(x) -> str:
    """CSV text of a scalar."""
    x = _num(x)
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _json(x) -> str:
    x = _num(x)
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            return "null"
        text = format(x, ".17g")
        if not any(ch in text for ch in ".en"):
            text += ".0"
        return text
    if isinstance(x, str):
        out = ['"']
        for ch in x:
            if ch in '"\\':
                out.append("\\" + ch)
            elif ord(ch) < 0x20:
                out.append(f"\\u{ord(ch):04x}")
            else:
                out.append(ch)
        out.append('"')
        return "".join(out)
    if isinstance(x, (tuple, list, np.ndarray)):
        return "[" + ", ".join(_json(v) for v in x) + "]"
    if isinstance(x, dict):
        return "{" + ", ".join(f"{_json(str(k))}: {_json(v)}" for k, v in x.items()) + "}"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _report_json(report: ScenarioReport) -> str:
    # the output location is excluded so reports do not depend on where they are written
    cfg = {f.name: getattr(report.config, f.name) for f in fields(report.config) if f.name != "out_dir"}
    lines = ["{", f'  "scenario": {_json(report.scenario)},', f'  "config": {_json(cfg)},', '  "checks": [']
    recs = []
    for c in report.checks:
        rec = {k: getattr(c, k) for k in REPORT_COLUMNS[1:]}
        recs.append("    " + _json(rec))
    lines.append(",\n".join(recs))
    lines.append("  ],")
    lines.append('  "series": [')
    tabs = []
    for t in report.series:
        tabs.append("    " + _json({"name": t.name, "columns": list(t.columns), "rows": [list(r) for r in t.rows]}))
    lines.append(",\n".join(tabs))
    lines.append("  ],")
    lines.append(f'  "verdict": {_json(report.verdict)}')
    lines.append("}")
    return "\n".join(line for line in lines if line != "") + "\n"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _report_csv(report: ScenarioReport) -> str:
    rows = [REPORT_COLUMNS]
    for c in report.checks:
        rows.append((report.scenario,) + tuple(getattr(c, k) for k in REPORT_COLUMNS[1:]))
    return _csv_text(rows)


def _series_csv(report: ScenarioReport) -> str:
    parts = []
    for t in report.series:
        parts.append(f"# table={t.name}\n")
        parts.append(_csv_text([t.columns] + list(t.rows)))
    return "".join(parts)


def emit_report(report: ScenarioReport, out_dir, fmt: str = "json") -> list:
    """Write ``<scenario>.report.<fmt>`` and ``<scenario>.series.csv``; return the paths."""
    if fmt not in ("json", "csv"):
        raise ValueError(f"format must be json or csv, got {fmt!r}")
    out = Path(out_dir)
    body = _report_json(report) if fmt == "json" else _report_csv(report)
    files = [
        (out / f"{report.scenario}.report.{fmt}", body),
        (out / f"{report.scenario}.series.csv", _series_csv(report)),
    ]
    try:
        out.mkdir(parents=True, exist_ok=True)
        for path, text in files:
            with open(path, "w", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {out}: {exc}") from exc
    return [p for p, _ in files]
