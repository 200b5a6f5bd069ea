# Tracking/Domain/mbpp.py
"""
Motion-based post-processing.

Each frame the Kalman prior is decoded into an estimation box. When the tracker's
maximum-response box overlaps it by at least `conf`, the max box is kept. Otherwise
every candidate is rescored as similarity x IoU with the estimation box and the best
one is emitted instead.
"""
from __future__ import annotations

import logging
import time
from typing import Iterable
from uuid import UUID, uuid4

from pydantic import BaseModel, ConfigDict, Field, model_validator

from Tracking.Domain import kalman
from Tracking.Domain.errors import NoCandidatesError, NonContiguousStreamError
from Tracking.Domain.fallback_mode_enum import FallbackMode
from Tracking.Domain.geometry import Box, ScoredBox, iou
from Tracking.Domain.kalman import FilterConfig, TrackState
from Tracking.Domain.update_policy_enum import UpdatePolicy

logger = logging.getLogger(__name__)


class StreamHeader(BaseModel):
    """First line of a candidate stream file."""

    sequence: str
    init_box: Box
    width: int = Field(gt=0)
    height: int = Field(gt=0)


class FrameObservation(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    frame: int = Field(ge=0)
    max_response: ScoredBox = Field(alias="max")
    candidates: list[ScoredBox] = Field(default_factory=list)

    @model_validator(mode="after")
    def _max_leads(self) -> "FrameObservation":
        # an empty list is accepted here and rejected by step with a domain error
        if self.candidates and self.candidates[0] != self.max_response:
            raise ValueError("candidates[0] must equal max")
        return self


class MbppConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    conf: float = Field(default=0.6, ge=0.0, le=1.0)
    update_policy: UpdatePolicy = UpdatePolicy.ALWAYS
    fallback: FallbackMode = FallbackMode.MAX_RESPONSE


class StepDiagnostics(BaseModel):
    frame: int
    estimation: Box
    max_iou: float
    drift_detected: bool = False
    chosen_index: int | None = 0
    scores: list[float] = Field(default_factory=list)
    fallback_used: bool = False
    clamped: bool = False


class TrackerSession(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    session_id: UUID = Field(default_factory=uuid4)
    kf: TrackState
    config: MbppConfig = Field(default_factory=MbppConfig)
    last_output: Box
    frame_count: int = 0


class SequenceRun(BaseModel):
    trajectory: list[Box]
    diagnostics: list[StepDiagnostics]
    mean_step_ms: float = 0.0

    @property
    def drift_frames(self) -> list[int]:
        return [d.frame for d in self.diagnostics if d.drift_detected]


def start(init_box: Box, config: MbppConfig | None = None, filter_config: FilterConfig | None = None) -> TrackerSession:
    kf = kalman.init(init_box, filter_config)
    return TrackerSession(kf=kf, config=config or MbppConfig(), last_output=init_box)


def location_score(candidate: ScoredBox, estimation: Box) -> float:
    return candidate.score * iou(candidate.box, estimation)


def step(session: TrackerSession, obs: FrameObservation) -> tuple[Box, StepDiagnostics]:
    if not obs.candidates:
        raise NoCandidatesError()
    config = session.config

    prior, estimation = kalman.predict(session.kf)
    b_e = estimation.to_box()
    max_box = obs.max_response.box
    max_iou = iou(max_box, b_e)
    diagnostics = StepDiagnostics(frame=obs.frame, estimation=b_e, max_iou=max_iou, clamped=estimation.clamped)

    output = max_box
    if max_iou < config.conf:
        scores = [location_score(c, b_e) for c in obs.candidates]
        best = 0
        for i, score in enumerate(scores):
            if score > scores[best]:
                best = i
        diagnostics.drift_detected = True
        diagnostics.scores = scores

        if scores[best] > 0:
            output = obs.candidates[best].box
            diagnostics.chosen_index = best
            if best:
                logger.debug("frame %d: relocated to candidate %d (%.3f)", obs.frame, best, scores[best])
        else:
            diagnostics.fallback_used = True
            diagnostics.chosen_index = 0 if config.fallback is FallbackMode.MAX_RESPONSE else None
            if config.fallback is FallbackMode.ESTIMATION_BOX:
                output = b_e
            logger.debug("frame %d: no candidate overlaps the estimation box, fallback=%s", obs.frame, config.fallback.value)

    trusted = config.update_policy is UpdatePolicy.ALWAYS or not diagnostics.drift_detected
    if trusted and not output.is_degenerate:
        session.kf = kalman.update(prior, output)
    else:
        session.kf = kalman.coast(prior)

    session.last_output = output
    session.frame_count += 1
    return output, diagnostics


def check_contiguous(frames: list[int]) -> None:
    if not frames:
        return
    if frames[0] not in (0, 1):
        raise NonContiguousStreamError(f"stream must start at frame 0 or 1, got {frames[0]}")
    for previous, current in zip(frames, frames[1:]):
        if current != previous + 1:
            raise NonContiguousStreamError(f"frame {current} follows frame {previous}")


def run_sequence(
    stream: Iterable[FrameObservation],
    init_box: Box,
    config: MbppConfig | None = None,
    filter_config: FilterConfig | None = None,
) -> SequenceRun:
    """Drive `step` over a stream. Frame 0, when present, is the init frame and emits `init_box`."""
    observations = list(stream)
    check_contiguous([o.frame for o in observations])
    if observations and observations[0].frame == 0:
        observations = observations[1:]

    session = start(init_box, config, filter_config)
    trajectory = [init_box]
    diagnostics: list[StepDiagnostics] = []
    elapsed = 0.0
    for obs in observations:
        t0 = time.perf_counter()
        box, diag = step(session, obs)
        elapsed += time.perf_counter() - t0
        trajectory.append(box)
        diagnostics.append(diag)

    mean_ms = 1000.0 * elapsed / len(observations) if observations else 0.0
    return SequenceRun(trajectory=trajectory, diagnostics=diagnostics, mean_step_ms=mean_ms)
