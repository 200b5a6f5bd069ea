from __future__ import annotations

import csv
import json
from pathlib import Path

from pydantic import ValidationError

from Tracking.Domain.errors import StreamFormatError
from Tracking.Domain.evaluation import EvalCurve, EvalReport
from Tracking.Ports.Outbound.report_interface import ReportStore


def _prepare(path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    return target


class ReportFileAdapter(ReportStore):
    """JSON report documents plus CSV and Markdown side outputs."""

    def write_report(self, path: str, report: EvalReport) -> None:
        _prepare(path).write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")

    def read_report(self, path: str) -> EvalReport:
        try:
            return EvalReport.model_validate_json(Path(path).read_text(encoding="utf-8"))
        except ValidationError as e:
            raise StreamFormatError(f"{path}: not a report ({e.errors()[0]['msg']})") from e

    def write_rows_csv(self, path: str, rows: list[dict]) -> None:
        if not rows:
            _prepare(path).write_text("", encoding="utf-8")
            return
        with open(_prepare(path), "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)

    def write_curve_csv(self, path: str, curve: EvalCurve) -> None:
        with open(_prepare(path), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "value"])
            writer.writerows(zip(curve.thresholds, curve.values))

    def write_text(self, path: str, text: str) -> None:
        _prepare(path).write_text(text, encoding="utf-8")
