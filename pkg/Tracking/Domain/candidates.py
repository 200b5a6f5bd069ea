# Tracking/Domain/candidates.py
from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from Tracking.Domain.errors import ConfigError, InvalidResponseFrameError
from Tracking.Domain.geometry import Box, ScoredBox, nms
from Tracking.Domain.mbpp import FrameObservation

DEFAULT_GRID_SIZE = 16


class CandidateConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n: int = Field(default=40, ge=1)
    nms_threshold: float = Field(default=0.5, ge=0.0, le=1.0)


UOT100_CANDIDATES = CandidateConfig(n=40)
UTB180_CANDIDATES = CandidateConfig(n=30)


class ResponseEntry(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    patch_index: int = Field(alias="patch", ge=0)
    score: float = Field(ge=0.0, le=1.0)
    box: Box


class ResponseFrame(BaseModel):
    """One frame of head output: a decoded box and a score for each of grid_size**2 patches."""

    model_config = ConfigDict(populate_by_name=True)

    frame: int = Field(default=0, ge=0)
    grid_size: int = Field(default=DEFAULT_GRID_SIZE, ge=1)
    entries: list[ResponseEntry]

    def check(self) -> None:
        expected = self.grid_size * self.grid_size
        if len(self.entries) != expected:
            raise InvalidResponseFrameError(f"expected {expected} entries, got {len(self.entries)}")
        seen = {e.patch_index for e in self.entries}
        if len(seen) != expected:
            raise InvalidResponseFrameError("duplicate patch index")
        if max(seen) >= expected:
            raise InvalidResponseFrameError(f"patch index out of range for grid size {self.grid_size}")


class CandidateSet(BaseModel):
    items: list[ScoredBox]
    n_requested: int

    @property
    def top(self) -> ScoredBox:
        return self.items[0]


def top_n(frame: ResponseFrame, n: int) -> list[ScoredBox]:
    ranked = sorted(frame.entries, key=lambda e: (-e.score, e.patch_index))
    return [ScoredBox(box=e.box, score=e.score) for e in ranked[:n]]


def extract(frame: ResponseFrame, n: int, nms_threshold: float) -> CandidateSet:
    frame.check()
    if not 1 <= n <= frame.grid_size * frame.grid_size:
        raise ConfigError(f"n must be in [1, {frame.grid_size ** 2}], got {n}")
    return CandidateSet(items=nms(top_n(frame, n), nms_threshold), n_requested=n)


def to_observation(frame_index: int, candidates: CandidateSet) -> FrameObservation:
    return FrameObservation(frame=frame_index, max=candidates.top, candidates=list(candidates.items))
