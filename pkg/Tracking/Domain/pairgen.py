# Tracking/Domain/pairgen.py
"""
Template/search pair generation from still detection images.

A pair is cut from one image: the template around the target at `template_factor`,
the search area at `search_factor`. The search area is then augmented with five
independent random ops in a fixed order, so a single integer seed reproduces a pair.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from typing import Iterable

import cv2
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from Tracking.Domain.errors import ConfigError, DegenerateBoxError, EmptyPoolError
from Tracking.Domain.geometry import Box
from Tracking.Domain.image_domain_enum import ImageDomain

logger = logging.getLogger(__name__)

OP_ORDER = ("grayscale", "hflip", "noise", "blur", "rotate")
MIN_BOX_SIDE = 1.0
SEED_BOUND = 2**31 - 1


class DetectionRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    image_path: str = Field(alias="image")
    boxes: list[Box]
    domain: ImageDomain
    dataset_id: str = Field(alias="dataset")

    @model_validator(mode="after")
    def _non_degenerate(self) -> "DetectionRecord":
        if any(b.is_degenerate for b in self.boxes):
            raise ValueError(f"degenerate box in {self.image_path}")
        return self

    def to_wire(self) -> dict:
        return {
            "image": self.image_path,
            "boxes": [b.as_list() for b in self.boxes],
            "domain": self.domain.value,
            "dataset": self.dataset_id,
        }


class AugmentationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p_grayscale: float = Field(default=0.1, ge=0.0, le=1.0)
    p_hflip: float = Field(default=0.15, ge=0.0, le=1.0)
    p_noise: float = Field(default=0.05, ge=0.0, le=1.0)
    p_blur: float = Field(default=0.05, ge=0.0, le=1.0)
    p_rotate: float = Field(default=0.05, ge=0.0, le=1.0)
    rotate_range: tuple[float, float] = (0.0, 10.0)
    noise_sigma: float = Field(default=5.0 / 255.0, ge=0.0)
    blur_kernel: int = Field(default=5, ge=1)
    blur_sigma: float = Field(default=1.0, gt=0.0)

    @field_validator("rotate_range")
    @classmethod
    def _ordered(cls, value: tuple[float, float]) -> tuple[float, float]:
        lo, hi = value
        if lo > hi or lo < -180 or hi > 180:
            raise ValueError(f"rotate_range must be ordered degrees in [-180, 180], got {value}")
        return value

    @field_validator("blur_kernel")
    @classmethod
    def _odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("blur_kernel must be odd")
        return value

    def probabilities(self) -> tuple[float, ...]:
        return self.p_grayscale, self.p_hflip, self.p_noise, self.p_blur, self.p_rotate


class CropConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    template_factor: float = Field(default=2.0, gt=1.0)
    search_factor: float = Field(default=4.0, gt=1.0)
    template_size: int = Field(default=128, ge=8)
    search_size: int = Field(default=256, ge=8)


OPEN_AIR_DATASETS = ("lasot", "got10k", "trackingnet", "coco")
UNDERWATER_DATASETS = ("ruod", "fishextend")


def _default_weights() -> dict[str, float]:
    return {name: 1.0 for name in OPEN_AIR_DATASETS + UNDERWATER_DATASETS}


def _default_domains() -> dict[str, ImageDomain]:
    domains = {name: ImageDomain.OPEN_AIR for name in OPEN_AIR_DATASETS}
    domains.update({name: ImageDomain.UNDERWATER for name in UNDERWATER_DATASETS})
    return domains


class SamplerConfig(BaseModel):
    """Dataset weights for hybrid sampling. Datasets missing from `weights` get `default_weight`."""

    model_config = ConfigDict(extra="forbid")

    weights: dict[str, float] = Field(default_factory=_default_weights)
    domains: dict[str, ImageDomain] = Field(default_factory=_default_domains)
    default_weight: float = Field(default=1.0, ge=0.0)
    epoch_size: int = Field(default=1000, ge=1)
    target_ratio: float = Field(default=2.0, gt=0.0)  # open-air : underwater
    rebalance: bool = False

    @field_validator("weights")
    @classmethod
    def _weights(cls, value: dict[str, float]) -> dict[str, float]:
        if any(w < 0 for w in value.values()):
            raise ValueError("dataset weights must be non-negative")
        if value and not any(w > 0 for w in value.values()):
            raise ValueError("at least one dataset weight must be positive")
        return value


class AugmentationPlan(BaseModel):
    grayscale: bool = False
    hflip: bool = False
    noise: bool = False
    blur: bool = False
    rotate: bool = False
    angle: float = 0.0
    noise_seed: int = 0

    def ops(self) -> list[str]:
        return [name for name in OP_ORDER if getattr(self, name)]


class PairSpec(BaseModel):
    index: int
    dataset: str
    image: str
    box_index: int
    box: Box
    domain: ImageDomain
    seed: int


class SamplePair(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    template: np.ndarray
    search: np.ndarray
    search_box: Box
    applied_ops: list[str]
    seed: int
    angle: float | None = None


# crops

def crop_region(target: Box, factor: float) -> tuple[float, float, float]:
    """Square crop (left, top, side) of side sqrt(w*h)*factor centered on the target."""
    side = math.sqrt(target.w * target.h) * factor
    cx, cy = target.center
    return cx - side / 2.0, cy - side / 2.0, side


def _channel_means(image: np.ndarray, x1: float, y1: float, side: float) -> tuple[float, ...]:
    height, width = image.shape[:2]
    left, top = max(int(math.floor(x1)), 0), max(int(math.floor(y1)), 0)
    right, bottom = min(int(math.ceil(x1 + side)), width), min(int(math.ceil(y1 + side)), height)
    if right <= left or bottom <= top:
        raise DegenerateBoxError("crop lies outside the image")
    inside = image[top:bottom, left:right].reshape(-1, 1 if image.ndim == 2 else image.shape[2])
    return tuple(float(m) for m in inside.mean(axis=0))


def crop_patch(image: np.ndarray, target: Box, factor: float, out_size: int) -> tuple[np.ndarray, Box]:
    x1, y1, side = crop_region(target, factor)
    scale = out_size / side
    means = _channel_means(image, x1, y1, side)
    # pixel-center aligned affine from image to crop coordinates
    M = np.array(
        [[scale, 0.0, (0.5 - x1) * scale - 0.5],
         [0.0, scale, (0.5 - y1) * scale - 0.5]],
        dtype=np.float64,
    )
    patch = cv2.warpAffine(
        image, M, (out_size, out_size),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=means if len(means) > 1 else means[0],
    )
    mapped = Box(x=(target.x - x1) * scale, y=(target.y - y1) * scale, w=target.w * scale, h=target.h * scale)
    return patch, mapped.clip(out_size, out_size)


def search_to_image(search_box: Box, target: Box, search_factor: float, search_size: int) -> Box:
    """Inverse of the search crop mapping, for boxes predicted in search coordinates."""
    x1, y1, side = crop_region(target, search_factor)
    scale = search_size / side
    return Box(x=search_box.x / scale + x1, y=search_box.y / scale + y1, w=search_box.w / scale, h=search_box.h / scale)


def crop_pair(
    image: np.ndarray,
    target: Box,
    template_factor: float = 2.0,
    search_factor: float = 4.0,
    template_size: int = 128,
    search_size: int = 256,
) -> tuple[np.ndarray, np.ndarray, Box]:
    height, width = image.shape[:2]
    clipped = target.clip(width, height)
    if clipped.is_degenerate:
        raise DegenerateBoxError("target is degenerate or outside the image")
    if template_factor <= 1 or search_factor <= 1:
        raise ConfigError("crop factors must be > 1")
    template, _ = crop_patch(image, clipped, template_factor, template_size)
    search, search_box = crop_patch(image, clipped, search_factor, search_size)
    return template, search, search_box


# augmentation

def plan_augmentation(config: AugmentationConfig, seed: int) -> AugmentationPlan:
    rng = np.random.default_rng(seed)
    draws = rng.random(len(OP_ORDER))
    lo, hi = config.rotate_range
    angle = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
    noise_seed = int(rng.integers(SEED_BOUND))
    fired = {name: bool(u < p) for name, u, p in zip(OP_ORDER, draws, config.probabilities())}
    return AugmentationPlan(**fired, angle=angle, noise_seed=noise_seed)


def _rotate_box(box: Box, angle: float, width: int, height: int) -> Box:
    M = cv2.getRotationMatrix2D((width / 2.0, height / 2.0), angle, 1.0)
    corners = np.array([[box.x, box.y, 1.0], [box.x2, box.y, 1.0], [box.x, box.y2, 1.0], [box.x2, box.y2, 1.0]])
    rotated = corners @ M.T
    x1, y1 = rotated.min(axis=0)
    x2, y2 = rotated.max(axis=0)
    return Box(x=float(x1), y=float(y1), w=float(x2 - x1), h=float(y2 - y1)).clip(width, height)


def apply_plan(
    raster: np.ndarray,
    box: Box,
    plan: AugmentationPlan,
    config: AugmentationConfig,
) -> tuple[np.ndarray, Box, list[str]]:
    out = raster
    applied: list[str] = []
    height, width = raster.shape[:2]

    if plan.grayscale and out.ndim == 3 and out.shape[2] == 3:
        out = cv2.cvtColor(cv2.cvtColor(out, cv2.COLOR_BGR2GRAY), cv2.COLOR_GRAY2BGR)
        applied.append("grayscale")
    if plan.hflip:
        out = cv2.flip(out, 1)
        box = Box(x=width - box.x - box.w, y=box.y, w=box.w, h=box.h)
        applied.append("hflip")
    if plan.noise:
        noise = np.random.default_rng(plan.noise_seed).normal(0.0, config.noise_sigma * 255.0, out.shape)
        out = np.clip(np.rint(out.astype(np.float64) + noise), 0, 255).astype(np.uint8)
        applied.append("noise")
    if plan.blur:
        k = config.blur_kernel
        out = cv2.GaussianBlur(out, (k, k), config.blur_sigma)
        applied.append("blur")
    if plan.rotate:
        rotated_box = _rotate_box(box, plan.angle, width, height)
        if rotated_box.is_degenerate:
            logger.debug("rotation by %.2f deg skipped: box leaves the raster", plan.angle)
        else:
            M = cv2.getRotationMatrix2D(((width - 1) / 2.0, (height - 1) / 2.0), plan.angle, 1.0)
            fill = cv2.mean(out)[: 1 if out.ndim == 2 else out.shape[2]]
            out = cv2.warpAffine(out, M, (width, height), flags=cv2.INTER_LINEAR,
                                 borderMode=cv2.BORDER_CONSTANT, borderValue=fill)
            box = rotated_box
            applied.append("rotate")

    if not applied:
        return raster.copy(), box, applied
    return out, box, applied


def augment(
    search: np.ndarray,
    search_box: Box,
    config: AugmentationConfig,
    rng_seed: int,
) -> tuple[np.ndarray, Box, list[str]]:
    return apply_plan(search, search_box, plan_augmentation(config, rng_seed), config)


def build_pair(
    image: np.ndarray,
    target: Box,
    seed: int,
    augmentation: AugmentationConfig | None = None,
    crop: CropConfig | None = None,
) -> SamplePair:
    augmentation = augmentation or AugmentationConfig()
    crop = crop or CropConfig()
    template, search, search_box = crop_pair(
        image, target, crop.template_factor, crop.search_factor, crop.template_size, crop.search_size
    )
    plan = plan_augmentation(augmentation, seed)
    search, search_box, applied = apply_plan(search, search_box, plan, augmentation)
    return SamplePair(
        template=template,
        search=search,
        search_box=search_box,
        applied_ops=applied,
        seed=seed,
        angle=plan.angle if "rotate" in applied else None,
    )


# sampling

def domain_ratio(weights: dict[str, float], domains: dict[str, ImageDomain]) -> float:
    """Expected open-air : underwater draw ratio under `weights`."""
    open_air = sum(w for name, w in weights.items() if domains.get(name) is ImageDomain.OPEN_AIR)
    underwater = sum(w for name, w in weights.items() if domains.get(name) is ImageDomain.UNDERWATER)
    if underwater == 0:
        return math.inf
    return open_air / underwater


def rebalance_weights(weights: dict[str, float], domains: dict[str, ImageDomain], target_ratio: float) -> dict[str, float]:
    """Scale the open-air weights so the expected domain ratio equals `target_ratio`."""
    current = domain_ratio(weights, domains)
    if current in (0.0, math.inf):
        return dict(weights)
    factor = target_ratio / current
    return {
        name: w * factor if domains.get(name) is ImageDomain.OPEN_AIR else w
        for name, w in weights.items()
    }


def group_by_dataset(records: Iterable[DetectionRecord]) -> dict[str, list[DetectionRecord]]:
    grouped: dict[str, list[DetectionRecord]] = defaultdict(list)
    for record in records:
        grouped[record.dataset_id].append(record)
    return dict(grouped)


def sample_epoch(
    records_by_dataset: dict[str, list[DetectionRecord]],
    sampler: SamplerConfig,
    rng_seed: int,
) -> list[PairSpec]:
    pools = {name: [r for r in records if r.boxes] for name, records in records_by_dataset.items()}
    domains = dict(sampler.domains)
    for name, records in pools.items():
        if records:
            domains.setdefault(name, records[0].domain)

    weights = {name: sampler.weights.get(name, sampler.default_weight) for name, records in pools.items() if records}
    if sampler.rebalance:
        weights = rebalance_weights(weights, domains, sampler.target_ratio)
    names = sorted(name for name, w in weights.items() if w > 0)
    if not names:
        raise EmptyPoolError("no dataset with records and positive weight")

    probabilities = np.array([weights[name] for name in names], dtype=np.float64)
    probabilities /= probabilities.sum()
    logger.info("sampling %d pairs from %s", sampler.epoch_size, dict(zip(names, probabilities.round(4).tolist())))

    rng = np.random.default_rng(rng_seed)
    choices = rng.choice(len(names), size=sampler.epoch_size, p=probabilities)
    manifest: list[PairSpec] = []
    for index, choice in enumerate(choices):
        name = names[int(choice)]
        record = pools[name][int(rng.integers(len(pools[name])))]
        box_index = int(rng.integers(len(record.boxes)))
        manifest.append(
            PairSpec(
                index=index,
                dataset=name,
                image=record.image_path,
                box_index=box_index,
                box=record.boxes[box_index],
                domain=domains.get(name, record.domain),
                seed=int(rng.integers(SEED_BOUND)),
            )
        )
    return manifest


def coco_to_records(
    coco: dict,
    image_root: str,
    domain: ImageDomain,
    dataset_id: str,
    min_side: float = MIN_BOX_SIDE,
) -> list[DetectionRecord]:
    """Convert a COCO-format annotation document into detection records, one per annotated image."""
    images = {img["id"]: img for img in coco.get("images", [])}
    boxes: dict[int, list[Box]] = defaultdict(list)
    for ann in coco.get("annotations", []):
        if ann.get("iscrowd", 0):
            continue
        x, y, w, h = ann["bbox"]
        if w < min_side or h < min_side:
            continue
        image = images.get(ann["image_id"])
        if image is None:
            continue
        box = Box(x=float(x), y=float(y), w=float(w), h=float(h))
        if "width" in image and "height" in image:
            box = box.clip(image["width"], image["height"])
            if box.is_degenerate:
                continue
        boxes[ann["image_id"]].append(box)

    root = image_root.rstrip("/")
    records = [
        DetectionRecord(
            image=f"{root}/{images[image_id]['file_name']}" if root else images[image_id]["file_name"],
            boxes=image_boxes,
            domain=domain,
            dataset=dataset_id,
        )
        for image_id, image_boxes in sorted(boxes.items())
    ]
    logger.info("converted %d images with %d boxes from %s", len(records), sum(len(b) for b in boxes.values()), dataset_id)
    return records
