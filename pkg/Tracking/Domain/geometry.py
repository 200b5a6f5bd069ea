# Tracking/Domain/geometry.py
from __future__ import annotations

import math
from typing import Any, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_serializer, model_validator

from Tracking.Domain.box_encoding_enum import BoxEncoding
from Tracking.Domain.errors import ConfigError, DegenerateBoxError


class Box(BaseModel):
    """Axis-aligned rectangle in pixels, corner encoded (left, top, width, height)."""

    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    w: float = Field(ge=0)
    h: float = Field(ge=0)

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, value: Any) -> Any:
        # wire records carry boxes as [x, y, w, h]
        if isinstance(value, (list, tuple)):
            if len(value) != 4:
                raise ValueError(f"box needs 4 values, got {len(value)}")
            x, y, w, h = value
            return {"x": x, "y": y, "w": w, "h": h}
        return value

    @model_serializer
    def _to_wire(self) -> list[float]:
        return self.as_list()

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "Box":
        return cls.model_validate(list(values))

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        # corner form so that overlap arithmetic stays exact for identical boxes
        return (self.x2 - self.x) * (self.y2 - self.y)

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    @property
    def is_degenerate(self) -> bool:
        return self.w * self.h == 0 or self.area <= 0

    def clip(self, width: float, height: float) -> "Box":
        x1 = min(max(self.x, 0.0), width)
        y1 = min(max(self.y, 0.0), height)
        x2 = min(max(self.x2, 0.0), width)
        y2 = min(max(self.y2, 0.0), height)
        return Box(x=x1, y=y1, w=x2 - x1, h=y2 - y1)

    def translate(self, dx: float, dy: float) -> "Box":
        return Box(x=self.x + dx, y=self.y + dy, w=self.w, h=self.h)


class CenterBox(BaseModel):
    model_config = ConfigDict(frozen=True)

    cx: float
    cy: float
    w: float = Field(ge=0)
    h: float = Field(ge=0)


class AreaAspect(BaseModel):
    """Center (u, v), pixel area s and aspect ratio r = w / h."""

    model_config = ConfigDict(frozen=True)

    u: float
    v: float
    s: float
    r: float

    def as_list(self) -> list[float]:
        return [self.u, self.v, self.s, self.r]


class ScoredBox(BaseModel):
    model_config = ConfigDict(frozen=True)

    box: Box
    score: float = Field(ge=0.0, le=1.0)


EncodedBox = Box | CenterBox | AreaAspect


def convert(box: Box, encoding: BoxEncoding) -> EncodedBox:
    if encoding is BoxEncoding.CORNER:
        return box
    cx, cy = box.center
    if encoding is BoxEncoding.CENTER:
        return CenterBox(cx=cx, cy=cy, w=box.w, h=box.h)
    if box.w <= 0 or box.h <= 0:
        raise DegenerateBoxError()
    return AreaAspect(u=cx, v=cy, s=box.w * box.h, r=box.w / box.h)


def to_corner(encoded: EncodedBox) -> Box:
    if isinstance(encoded, Box):
        return encoded
    if isinstance(encoded, CenterBox):
        return Box(x=encoded.cx - encoded.w / 2.0, y=encoded.cy - encoded.h / 2.0, w=encoded.w, h=encoded.h)
    if encoded.s <= 0 or encoded.r <= 0:
        raise DegenerateBoxError()
    w = math.sqrt(encoded.s * encoded.r)
    h = math.sqrt(encoded.s / encoded.r)
    return Box(x=encoded.u - w / 2.0, y=encoded.v - h / 2.0, w=w, h=h)


def _overlap(a: Box, b: Box) -> tuple[float, float]:
    iw = max(0.0, min(a.x2, b.x2) - max(a.x, b.x))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y, b.y))
    inter = iw * ih
    return inter, a.area + b.area - inter


def iou(a: Box, b: Box) -> float:
    if a.is_degenerate or b.is_degenerate:
        return 0.0
    inter, union = _overlap(a, b)
    if union <= 0:
        return 0.0
    return inter / union


def giou(a: Box, b: Box) -> float:
    if a.is_degenerate or b.is_degenerate:
        return 0.0
    inter, union = _overlap(a, b)
    hull = (max(a.x2, b.x2) - min(a.x, b.x)) * (max(a.y2, b.y2) - min(a.y, b.y))
    if union <= 0 or hull <= 0:
        return 0.0
    return inter / union - (hull - union) / hull


def boxes_to_array(boxes: Sequence[Box]) -> np.ndarray:
    """Stack boxes as an (n, 4) float64 array of [x1, y1, x2, y2]."""
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([[b.x, b.y, b.x2, b.y2] for b in boxes], dtype=np.float64)


def pairwise_iou(boxes_a: Sequence[Box], boxes_b: Sequence[Box]) -> np.ndarray:
    """IoU matrix of shape (len(a), len(b)); same arithmetic as `iou`, element for element."""
    a = boxes_to_array(boxes_a)
    b = boxes_to_array(boxes_b)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])

    iw = np.maximum(0.0, np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0]))
    ih = np.maximum(0.0, np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1]))
    inter = iw * ih
    union = area_a[:, None] + area_b[None, :] - inter

    degenerate_a = np.array([box.is_degenerate for box in boxes_a], dtype=bool)
    degenerate_b = np.array([box.is_degenerate for box in boxes_b], dtype=bool)
    invalid = degenerate_a[:, None] | degenerate_b[None, :] | (union <= 0)

    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=~invalid)
    return out


def nms(candidates: Sequence[ScoredBox], iou_threshold: float) -> list[ScoredBox]:
    """Greedy suppression; stable on score ties, suppresses at IoU >= iou_threshold."""
    if not 0.0 <= iou_threshold <= 1.0:
        raise ConfigError(f"iou_threshold must be in [0, 1], got {iou_threshold}")
    if not candidates:
        return []

    scores = np.array([c.score for c in candidates], dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    overlaps = pairwise_iou([c.box for c in candidates], [c.box for c in candidates])

    suppressed = np.zeros(len(candidates), dtype=bool)
    keep: list[ScoredBox] = []
    for i in order:
        if suppressed[i]:
            continue
        keep.append(candidates[i])
        suppressed |= overlaps[i] >= iou_threshold
    return keep
