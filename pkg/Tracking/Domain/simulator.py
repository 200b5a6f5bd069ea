# Tracking/Domain/simulator.py
"""
Score-level scene simulator standing in for a neural tracker.

Agents (index 0 is the tracked target, the rest are look-alike distractors) move with
perturbed constant velocity and reflect off the arena walls. Every frame each agent
yields a scored box, uniform clutter boxes are added, and the candidates are ranked by
score, which is exactly what the post-processing stage consumes.
"""
from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from Tracking.Domain.candidates import DEFAULT_GRID_SIZE, ResponseEntry, ResponseFrame
from Tracking.Domain.errors import StreamFormatError
from Tracking.Domain.geometry import Box, ScoredBox
from Tracking.Domain.mbpp import FrameObservation

logger = logging.getLogger(__name__)

_PLACEMENT_ATTEMPTS = 1000


class SceneEvent(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: int = Field(ge=0)
    duration: int = Field(ge=1)

    def active(self, frame: int) -> bool:
        return self.start <= frame < self.start + self.duration


class SceneConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    arena_width: float = Field(default=640.0, gt=0)
    arena_height: float = Field(default=480.0, gt=0)
    num_frames: int = Field(default=150, ge=2)
    num_distractors: int = Field(default=2, ge=0)

    speed_mean: float = Field(default=2.0, ge=0)
    speed_std: float = Field(default=0.5, ge=0)
    velocity_noise_std: float = Field(default=0.1, ge=0)
    target_width: float = Field(default=40.0, gt=0)
    target_height: float = Field(default=40.0, gt=0)
    size_jitter_std: float = Field(default=0.5, ge=0)
    min_separation: float = Field(default=80.0, ge=0)

    target_score_mean: float = Field(default=0.85, ge=0, le=1)
    target_score_std: float = Field(default=0.05, ge=0)
    distractor_score_mean: float = Field(default=0.75, ge=0, le=1)
    distractor_score_std: float = Field(default=0.05, ge=0)
    swap_score_mean: float = Field(default=0.95, ge=0, le=1)

    clutter_count: int = Field(default=20, ge=0)
    clutter_score_mean: float = Field(default=0.1, ge=0, le=1)
    clutter_score_std: float = Field(default=0.05, ge=0)
    num_candidates: int = Field(default=40, ge=1)

    swap_events: list[SceneEvent] = Field(default_factory=list)
    occlusion_events: list[SceneEvent] = Field(default_factory=list)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "SceneConfig":
        problems = []
        for kind, events in (("swap", self.swap_events), ("occlusion", self.occlusion_events)):
            for event in events:
                if event.start < 1 or event.start + event.duration > self.num_frames:
                    problems.append(f"{kind} event {event.start}+{event.duration} outside frames [1, {self.num_frames})")
        if self.swap_events and self.num_distractors == 0:
            problems.append("swap events need at least one distractor")
        if self.target_width >= self.arena_width or self.target_height >= self.arena_height:
            problems.append("target does not fit in the arena")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def swap_active(self, frame: int) -> bool:
        return any(e.active(frame) for e in self.swap_events)

    def occluded(self, frame: int) -> bool:
        return any(e.active(frame) for e in self.occlusion_events)


class SyntheticSequence(BaseModel):
    name: str
    ground_truth: list[Box]
    identities: list[list[Box]]         # per frame, agent 0 is the target
    agent_scores: list[list[float]]     # 0.0 marks an occluded agent
    stream: list[FrameObservation]
    config: SceneConfig

    @property
    def init_box(self) -> Box:
        return self.ground_truth[0]

    def event_frames(self) -> list[int]:
        return [f for f in range(self.config.num_frames) if self.config.swap_active(f)]


def swap_scenario(seed: int, start: int = 60, duration: int = 20, **overrides) -> SceneConfig:
    return SceneConfig(seed=seed, swap_events=[SceneEvent(start=start, duration=duration)], **overrides)


def _initial_positions(config: SceneConfig, rng: np.random.Generator) -> np.ndarray:
    n_agents = 1 + config.num_distractors
    max_x = config.arena_width - config.target_width
    max_y = config.arena_height - config.target_height
    positions = np.zeros((n_agents, 2))
    for k in range(n_agents):
        for _ in range(_PLACEMENT_ATTEMPTS):
            candidate = np.array([rng.uniform(0, max_x), rng.uniform(0, max_y)])
            if k == 0 or np.min(np.linalg.norm(positions[:k] - candidate, axis=1)) >= config.min_separation:
                break
        else:
            logger.warning(
                "seed %d: agent %d placed closer than min_separation=%.1f after %d attempts",
                config.seed, k, config.min_separation, _PLACEMENT_ATTEMPTS,
            )
        positions[k] = candidate
    return positions


def _reflect(position: float, velocity: float, upper: float) -> tuple[float, float]:
    if position < 0:
        return -position, -velocity
    if position > upper:
        return 2 * upper - position, -velocity
    return position, velocity


def _draw_score(rng: np.random.Generator, mean: float, std: float) -> float:
    return float(np.clip(rng.normal(mean, std), 0.0, 1.0))


def generate(config: SceneConfig) -> SyntheticSequence:
    rng = np.random.default_rng(config.seed)
    n_agents = 1 + config.num_distractors
    max_x = config.arena_width - config.target_width
    max_y = config.arena_height - config.target_height
    max_speed = config.speed_mean + 3 * config.speed_std

    positions = _initial_positions(config, rng)
    speeds = np.abs(rng.normal(config.speed_mean, config.speed_std, n_agents))
    headings = rng.uniform(0, 2 * math.pi, n_agents)
    velocities = np.stack([speeds * np.cos(headings), speeds * np.sin(headings)], axis=1)

    ground_truth: list[Box] = []
    identities: list[list[Box]] = []
    agent_scores: list[list[float]] = []
    stream: list[FrameObservation] = []

    for frame in range(config.num_frames):
        if frame > 0:
            velocities += rng.normal(0, config.velocity_noise_std, velocities.shape)
            speed = np.linalg.norm(velocities, axis=1, keepdims=True)
            velocities = np.where(speed > max_speed, velocities * max_speed / np.maximum(speed, 1e-12), velocities)
            positions += velocities
            for k in range(n_agents):
                positions[k, 0], velocities[k, 0] = _reflect(positions[k, 0], velocities[k, 0], max_x)
                positions[k, 1], velocities[k, 1] = _reflect(positions[k, 1], velocities[k, 1], max_y)

        # size jitter is symmetric about the agent center so boxes stay inside the arena
        jitter = rng.normal(0, config.size_jitter_std, (n_agents, 2))
        boxes = []
        for k in range(n_agents):
            w = min(max(config.target_width + jitter[k, 0], 1.0), config.target_width + 2 * positions[k, 0], config.target_width + 2 * (max_x - positions[k, 0]))
            h = min(max(config.target_height + jitter[k, 1], 1.0), config.target_height + 2 * positions[k, 1], config.target_height + 2 * (max_y - positions[k, 1]))
            cx = positions[k, 0] + config.target_width / 2.0
            cy = positions[k, 1] + config.target_height / 2.0
            boxes.append(Box(x=float(cx - w / 2.0), y=float(cy - h / 2.0), w=float(w), h=float(h)))

        scores = [_draw_score(rng, config.target_score_mean, config.target_score_std)]
        for k in range(1, n_agents):
            mean = config.swap_score_mean if k == 1 and config.swap_active(frame) else config.distractor_score_mean
            scores.append(_draw_score(rng, mean, config.distractor_score_std))
        if config.occluded(frame):
            scores[0] = 0.0

        clutter = _clutter(config, rng)

        ground_truth.append(boxes[0])
        identities.append(boxes)
        agent_scores.append(scores)
        if frame == 0:
            init = ScoredBox(box=boxes[0], score=1.0)
            stream.append(FrameObservation(frame=0, max=init, candidates=[init]))
            continue

        pool = [ScoredBox(box=b, score=s) for k, (b, s) in enumerate(zip(boxes, scores)) if not (k == 0 and config.occluded(frame))]
        pool.extend(clutter)
        ranked = sorted(pool, key=lambda c: -c.score)[: config.num_candidates]
        stream.append(FrameObservation(frame=frame, max=ranked[0], candidates=ranked))

    logger.debug("generated scene seed=%d frames=%d agents=%d", config.seed, config.num_frames, n_agents)
    return SyntheticSequence(
        name=f"sim_{config.seed:04d}",
        ground_truth=ground_truth,
        identities=identities,
        agent_scores=agent_scores,
        stream=stream,
        config=config,
    )


def _clutter(config: SceneConfig, rng: np.random.Generator) -> list[ScoredBox]:
    out = []
    for _ in range(config.clutter_count):
        w = config.target_width * rng.uniform(0.5, 1.5)
        h = config.target_height * rng.uniform(0.5, 1.5)
        x = rng.uniform(0, max(config.arena_width - w, 0.0))
        y = rng.uniform(0, max(config.arena_height - h, 0.0))
        score = _draw_score(rng, config.clutter_score_mean, config.clutter_score_std)
        out.append(ScoredBox(box=Box(x=float(x), y=float(y), w=float(w), h=float(h)), score=score))
    return out


def dbpp_baseline(stream: Sequence[FrameObservation], init_box: Box | None = None) -> list[Box]:
    """Per-frame maximum-response box. A stream that starts at frame 1 is prefixed with `init_box`."""
    if not stream:
        raise StreamFormatError("dbpp_baseline needs a non-empty stream")
    trajectory = [obs.max_response.box for obs in stream]
    if stream[0].frame == 1 and init_box is not None:
        trajectory.insert(0, init_box)
    return trajectory


def render_response_frame(
    sequence: SyntheticSequence,
    frame: int,
    grid_size: int = DEFAULT_GRID_SIZE,
    seed: int | None = None,
) -> ResponseFrame:
    """
    Render one frame as an s x s response map over the arena.

    Each patch scores every agent by its similarity damped with a Gaussian of the
    patch-to-center distance in cells and regresses the box of the strongest agent.
    Background patches regress a target-sized box at the patch center.
    """
    config = sequence.config
    rng = np.random.default_rng(config.seed * 100_003 + frame if seed is None else seed)
    cell_w = config.arena_width / grid_size
    cell_h = config.arena_height / grid_size
    boxes = sequence.identities[frame]
    scores = sequence.agent_scores[frame]

    entries = []
    for patch in range(grid_size * grid_size):
        row, col = divmod(patch, grid_size)
        px, py = (col + 0.5) * cell_w, (row + 0.5) * cell_h
        best_score = _draw_score(rng, config.clutter_score_mean / 2.0, config.clutter_score_std / 2.0)
        best_box = Box(
            x=px - config.target_width / 2.0, y=py - config.target_height / 2.0,
            w=config.target_width, h=config.target_height,
        )
        for box, score in zip(boxes, scores):
            cx, cy = box.center
            r2 = ((px - cx) / cell_w) ** 2 + ((py - cy) / cell_h) ** 2
            damped = score * math.exp(-r2 / 2.0)
            if damped > best_score:
                best_score, best_box = damped, box
        entries.append(ResponseEntry(patch=patch, score=best_score, box=best_box))
    return ResponseFrame(frame=frame, grid_size=grid_size, entries=entries)
