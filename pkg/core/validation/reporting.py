import io
from enum import StrEnum
from pathlib import Path

import pandas as pd

from .rules import Report, Status


class ReportFormat(StrEnum):
    TEXT = "text"
    JSON = "json"
    CSV = "csv"


SUMMARY_COLUMNS = ["name", "status", "selected", "counterexamples", "timing_ms"]
EXPORT_COLUMNS = ["rule", "severity", "class", "assignment", "message", "line"]


def _assignment_text(assignment: dict[str, str]) -> str:
    return ", ".join(f"{var}={value}" for var, value in assignment.items())


def render_text(report: Report) -> str:
    lines = [
        f"bdv {report.version}",
        f"universe: {len(report.universe.carriers)} carrier(s), "
        f"{len(report.universe.constants)} constant(s), {report.universe.total} item(s)",
        "",
    ]
    for result in report.rules:
        lines.append(
            f"{result.status:<5} {result.name}  selected={result.selected} "
            f"counterexamples={len(result.counterexamples)} ({result.timing_ms:.1f} ms)"
        )
        for counterexample in result.counterexamples:
            lines.append(f"      {counterexample.message}  [{_assignment_text(counterexample.assignment)}]")
        if result.status is Status.ERROR:
            error = result.error
            where = f" at {error.span}" if error.span else ""
            lines.append(f"      {error.kind}{where}: {error.detail}  [{_assignment_text(error.assignment)}]")
    if report.skipped:
        lines.append("")
        lines.append(f"not run (fail-fast): {', '.join(report.skipped)}")
    totals = report.totals
    lines.append("")
    lines.append(
        f"TOTAL {totals.ok} OK, {totals.ko} KO, {totals.error} ERROR, "
        f"{totals.counterexamples} counterexample(s) in {report.wall_ms:.0f} ms"
    )
    return "\n".join(lines) + "\n"


def render_json(report: Report) -> str:
    return report.model_dump_json(indent=2) + "\n"


def render_csv(report: Report) -> str:
    rows = [
        [r.name, str(r.status), r.selected, len(r.counterexamples), round(r.timing_ms, 3)] for r in report.rules
    ]
    buffer = io.StringIO()
    pd.DataFrame(rows, columns=SUMMARY_COLUMNS).to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


RENDERERS = {
    ReportFormat.TEXT: render_text,
    ReportFormat.JSON: render_json,
    ReportFormat.CSV: render_csv,
}


def render_report(report: Report, fmt: ReportFormat | str = ReportFormat.TEXT) -> str:
    return RENDERERS[ReportFormat(fmt)](report)


def parse_json_report(text: str) -> Report:
    return Report.model_validate_json(text)


def export_counterexamples(report: Report, path: str | Path):
    """
    One CSV row per counterexample, for the engineers who correct the data
    """
    rows = []
    for result in report.rules:
        for counterexample in result.counterexamples:
            rows.append(
                [
                    result.name,
                    result.severity,
                    result.error_class,
                    _assignment_text(counterexample.assignment),
                    counterexample.message,
                    counterexample.span or "",
                ]
            )
    pd.DataFrame(rows, columns=EXPORT_COLUMNS).to_csv(path, index=False, lineterminator="\n")
