# Tracking/Domain/run_config.py
from __future__ import annotations

import copy
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from Tracking.Domain.candidates import CandidateConfig
from Tracking.Domain.errors import ConfigError
from Tracking.Domain.kalman import FilterConfig
from Tracking.Domain.mbpp import MbppConfig
from Tracking.Domain.pairgen import AugmentationConfig, CropConfig, SamplerConfig
from Tracking.Domain.simulator import SceneConfig


class EvalSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    subsets_file: str | None = None
    workers: int | None = Field(default=None, ge=1)
    label: str = ""

    @field_validator("subsets_file")
    @classmethod
    def _exists(cls, value: str | None) -> str | None:
        if value is not None and not Path(value).is_file():
            raise ValueError(f"subsets file not found: {value}")
        return value


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mbpp: MbppConfig = Field(default_factory=MbppConfig)
    filter: FilterConfig = Field(default_factory=FilterConfig)
    candidates: CandidateConfig = Field(default_factory=CandidateConfig)
    scene: SceneConfig = Field(default_factory=SceneConfig)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    augmentation: AugmentationConfig = Field(default_factory=AugmentationConfig)
    crop: CropConfig = Field(default_factory=CropConfig)
    eval: EvalSettings = Field(default_factory=EvalSettings)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)


def parse_override(override: str) -> tuple[list[str], Any]:
    """`section.key=value` with the value read as a YAML scalar or flow list."""
    path, sep, raw = override.partition("=")
    if not sep or not path:
        raise ConfigError(f"override must look like section.key=value, got {override!r}")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {override!r}: {exc}") from exc
    return path.strip().split("."), value


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    merged = copy.deepcopy(data)
    for override in overrides:
        keys, value = parse_override(override)
        node = merged
        for key in keys[:-1]:
            child = node.setdefault(key, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {override!r}: {key} is not a section")
            node = child
        node[keys[-1]] = value
    return merged


def resolve(data: dict | None, overrides: list[str] | None = None) -> RunConfig:
    raw = apply_overrides(data or {}, overrides or [])
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(problems) from exc
