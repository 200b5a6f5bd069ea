# Tracking/Domain/evaluation.py
"""
One-pass evaluation: success (AUC), precision at 20 px and normalized precision.

Conventions, also written into every report header:
  success      overlap > t        t = 0.00, 0.01, ..., 1.00   summary = mean of curve
  precision    center error <= t  t = 0, 1, ..., 50 px        summary = value at 20 px
  norm prec.   norm. error <= t   t = 0.000, 0.005, ..., 0.5  summary = mean of curve
The init frame is included. Degenerate ground-truth boxes are skipped for normalized precision.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Sequence

import numpy as np
from pydantic import BaseModel, Field, field_validator

from Tracking.Domain.errors import LengthMismatchError, StreamFormatError, UnknownSequenceError
from Tracking.Domain.geometry import Box, iou

logger = logging.getLogger(__name__)

SUCCESS_THRESHOLDS = np.arange(101) / 100.0
PRECISION_THRESHOLDS = np.arange(51, dtype=np.float64)
NORM_PRECISION_THRESHOLDS = np.arange(101) / 200.0
PRECISION_AT = 20

CONVENTIONS = {
    "protocol": "OPE",
    "success": "fraction of frames with IoU > t, t in 0..1 step 0.01; AUC = mean over the 101 thresholds",
    "precision": "fraction of frames with center error <= t px, t in 0..50 step 1; P = value at 20 px",
    "norm_precision": "fraction of frames with ||(dcx/w_gt, dcy/h_gt)|| <= t, t in 0..0.5 step 0.005; P-Norm = mean",
    "init_frame": "included",
}


class EvalCurve(BaseModel):
    thresholds: list[float]
    values: list[float]
    summary: float
    skipped: int = 0


class SubsetSpec(BaseModel):
    name: str
    sequences: list[str] = Field(min_length=1)


class SequenceResult(BaseModel):
    name: str
    frames: int
    auc: float
    precision: float
    norm_precision: float
    skipped_frames: int = 0


class SummaryRow(BaseModel):
    name: str
    count: int
    auc: float | None = None
    precision: float | None = None
    norm_precision: float | None = None


class AttributeReport(BaseModel):
    overall: SummaryRow
    subsets: list[SummaryRow] = Field(default_factory=list)
    complements: list[SummaryRow] = Field(default_factory=list)


class EvalReport(BaseModel):
    label: str = ""
    conventions: dict[str, str] = Field(default_factory=lambda: dict(CONVENTIONS))
    sequences: list[SequenceResult]
    overall: SummaryRow
    subsets: list[SummaryRow] = Field(default_factory=list)
    complements: list[SummaryRow] = Field(default_factory=list)

    @field_validator("sequences")
    @classmethod
    def _sorted(cls, value: list[SequenceResult]) -> list[SequenceResult]:
        return sorted(value, key=lambda r: r.name)


def _check_lengths(traj: Sequence[Box], gt: Sequence[Box]) -> None:
    if len(traj) != len(gt):
        raise LengthMismatchError(len(traj), len(gt))
    if not gt:
        raise StreamFormatError("evaluation needs at least one frame")


def _centers(boxes: Sequence[Box]) -> np.ndarray:
    return np.array([b.center for b in boxes], dtype=np.float64)


def overlaps(traj: Sequence[Box], gt: Sequence[Box]) -> np.ndarray:
    _check_lengths(traj, gt)
    return np.array([iou(t, g) for t, g in zip(traj, gt)], dtype=np.float64)


def center_errors(traj: Sequence[Box], gt: Sequence[Box]) -> np.ndarray:
    _check_lengths(traj, gt)
    return np.linalg.norm(_centers(traj) - _centers(gt), axis=1)


def success_curve(traj: Sequence[Box], gt: Sequence[Box]) -> EvalCurve:
    ious = overlaps(traj, gt)
    values = np.mean(ious[:, None] > SUCCESS_THRESHOLDS[None, :], axis=0)
    return EvalCurve(thresholds=SUCCESS_THRESHOLDS.tolist(), values=values.tolist(), summary=float(np.mean(values)))


def precision_curve(traj: Sequence[Box], gt: Sequence[Box]) -> EvalCurve:
    errors = center_errors(traj, gt)
    values = np.mean(errors[:, None] <= PRECISION_THRESHOLDS[None, :], axis=0)
    return EvalCurve(thresholds=PRECISION_THRESHOLDS.tolist(), values=values.tolist(), summary=float(values[PRECISION_AT]))


def norm_precision_curve(traj: Sequence[Box], gt: Sequence[Box]) -> EvalCurve:
    _check_lengths(traj, gt)
    valid = [(t, g) for t, g in zip(traj, gt) if not g.is_degenerate]
    skipped = len(gt) - len(valid)
    if skipped:
        logger.debug("normalized precision skipped %d frames with degenerate ground truth", skipped)
    if not valid:
        zeros = [0.0] * len(NORM_PRECISION_THRESHOLDS)
        return EvalCurve(thresholds=NORM_PRECISION_THRESHOLDS.tolist(), values=zeros, summary=0.0, skipped=skipped)

    t_boxes, g_boxes = zip(*valid)
    delta = _centers(t_boxes) - _centers(g_boxes)
    sizes = np.array([[g.w, g.h] for g in g_boxes], dtype=np.float64)
    errors = np.linalg.norm(delta / sizes, axis=1)
    values = np.mean(errors[:, None] <= NORM_PRECISION_THRESHOLDS[None, :], axis=0)
    return EvalCurve(
        thresholds=NORM_PRECISION_THRESHOLDS.tolist(),
        values=values.tolist(),
        summary=float(np.mean(values)),
        skipped=skipped,
    )


def evaluate_sequence(name: str, traj: Sequence[Box], gt: Sequence[Box]) -> SequenceResult:
    norm = norm_precision_curve(traj, gt)
    return SequenceResult(
        name=name,
        frames=len(gt),
        auc=success_curve(traj, gt).summary,
        precision=precision_curve(traj, gt).summary,
        norm_precision=norm.summary,
        skipped_frames=norm.skipped,
    )


def evaluate_many(
    pairs: dict[str, tuple[Sequence[Box], Sequence[Box]]],
    max_workers: int | None = None,
) -> list[SequenceResult]:
    """Evaluate `{name: (traj, gt)}` on a thread pool, one sequence per task."""
    names = sorted(pairs)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(lambda n: evaluate_sequence(n, *pairs[n]), names))
    return results


def _mean(values: Iterable[float]) -> float | None:
    values = list(values)
    return float(np.mean(values)) if values else None


def summarize(name: str, results: Sequence[SequenceResult]) -> SummaryRow:
    return SummaryRow(
        name=name,
        count=len(results),
        auc=_mean(r.auc for r in results),
        precision=_mean(r.precision for r in results),
        norm_precision=_mean(r.norm_precision for r in results),
    )


def attribute_report(results: Sequence[SequenceResult], subsets: Sequence[SubsetSpec]) -> AttributeReport:
    by_name = {r.name: r for r in results}
    unknown = sorted({s for spec in subsets for s in spec.sequences if s not in by_name})
    if unknown:
        raise UnknownSequenceError(unknown)

    report = AttributeReport(overall=summarize("overall", results))
    for spec in subsets:
        members = set(spec.sequences)
        report.subsets.append(summarize(spec.name, [by_name[n] for n in sorted(members)]))
        report.complements.append(
            summarize(f"{spec.name} (complement)", [r for r in results if r.name not in members])
        )
    return report


def build_report(results: Sequence[SequenceResult], subsets: Sequence[SubsetSpec] = (), label: str = "") -> EvalReport:
    attributes = attribute_report(results, subsets)
    return EvalReport(
        label=label,
        sequences=list(results),
        overall=attributes.overall,
        subsets=attributes.subsets,
        complements=attributes.complements,
    )


class ComparisonRow(BaseModel):
    scope: str
    label: str
    count: int
    auc: float | None
    precision: float | None
    norm_precision: float | None
    d_auc: float | None = None
    d_precision: float | None = None
    d_norm_precision: float | None = None


def _delta(value: float | None, base: float | None) -> float | None:
    if value is None or base is None:
        return None
    return value - base


def compare_reports(reports: Sequence[EvalReport]) -> list[ComparisonRow]:
    """One row per (scope, report); deltas are taken against the first report."""
    if not reports:
        return []
    rows: list[ComparisonRow] = []
    base = reports[0]
    for pick in (lambda r: [r.overall], lambda r: r.subsets, lambda r: r.complements):
        base_rows = {row.name: row for row in pick(base)}
        for name in base_rows:
            for index, report in enumerate(reports):
                row = next((r for r in pick(report) if r.name == name), None)
                if row is None:
                    continue
                reference = base_rows[name]
                label = report.label or f"report{index}"
                rows.append(
                    ComparisonRow(
                        scope=name,
                        label=label,
                        count=row.count,
                        auc=row.auc,
                        precision=row.precision,
                        norm_precision=row.norm_precision,
                        d_auc=_delta(row.auc, reference.auc) if index else None,
                        d_precision=_delta(row.precision, reference.precision) if index else None,
                        d_norm_precision=_delta(row.norm_precision, reference.norm_precision) if index else None,
                    )
                )
    return rows
