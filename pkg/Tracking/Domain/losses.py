# Tracking/Domain/losses.py
"""Training objective terms as plain numpy functions, used to verify head outputs offline."""
from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from Tracking.Domain.geometry import Box, giou

EPS = 1e-7
LAMBDA_IOU = 2.0
LAMBDA_L1 = 5.0


class ScoreMap(BaseModel):
    """Predicted probabilities `p` and Gaussian-smoothed targets `y` (1 at the target cell)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: np.ndarray
    y: np.ndarray

    @field_validator("p", "y", mode="before")
    @classmethod
    def _array(cls, value: Any) -> np.ndarray:
        return np.atleast_1d(np.asarray(value, dtype=np.float64))

    @model_validator(mode="after")
    def _consistent(self) -> "ScoreMap":
        if self.p.shape != self.y.shape:
            raise ValueError(f"p and y shapes differ: {self.p.shape} vs {self.y.shape}")
        if np.any((self.y < 0) | (self.y > 1)):
            raise ValueError("targets must lie in [0, 1]")
        return self

    def clamped(self) -> np.ndarray:
        p = np.clip(self.p, EPS, 1.0 - EPS)
        if not np.all((p > 0) & (p < 1)):
            # only NaN survives the clip
            raise ValueError("predicted probabilities are not finite")
        return p


def focal_loss(score_map: ScoreMap, alpha: float = 2.0, beta: float = 4.0) -> float:
    """Penalty-reduced focal loss, averaged over all cells."""
    p = score_map.clamped()
    y = score_map.y
    positive = y == 1.0
    pos = -((1.0 - p) ** alpha) * np.log(p)
    neg = -((1.0 - y) ** beta) * (p ** alpha) * np.log(1.0 - p)
    return float(np.mean(np.where(positive, pos, neg)))


def focal_loss_grad(score_map: ScoreMap, alpha: float = 2.0, beta: float = 4.0) -> np.ndarray:
    """Analytic d(focal_loss)/dp, evaluated at the clamped probabilities."""
    p = score_map.clamped()
    y = score_map.y
    positive = y == 1.0
    pos = alpha * (1.0 - p) ** (alpha - 1.0) * np.log(p) - (1.0 - p) ** alpha / p
    neg = -((1.0 - y) ** beta) * (alpha * p ** (alpha - 1.0) * np.log(1.0 - p) - p ** alpha / (1.0 - p))
    return np.where(positive, pos, neg) / p.size


def l1_loss(pred: Box, gt: Box, image_size: tuple[float, float] | None = None) -> float:
    a = np.array(pred.as_list())
    b = np.array(gt.as_list())
    if image_size is not None:
        width, height = image_size
        scale = np.array([width, height, width, height], dtype=np.float64)
        a, b = a / scale, b / scale
    return float(np.mean(np.abs(a - b)))


def giou_loss(pred: Box, gt: Box) -> float:
    return 1.0 - giou(pred, gt)


def box_regression_losses(pred: Box, gt: Box, image_size: tuple[float, float] | None = None) -> tuple[float, float]:
    return l1_loss(pred, gt, image_size), giou_loss(pred, gt)


def total_loss(
    cls: float,
    iou: float,
    l1: float,
    lambda_iou: float = LAMBDA_IOU,
    lambda_l1: float = LAMBDA_L1,
) -> float:
    if cls < 0 or iou < 0 or l1 < 0:
        raise ValueError("loss terms must be non-negative")
    return cls + lambda_iou * iou + lambda_l1 * l1
