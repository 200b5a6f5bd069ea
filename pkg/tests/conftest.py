from pathlib import Path

import numpy as np
import pytest

from Tracking.Domain.geometry import Box, ScoredBox
from Tracking.Domain.mbpp import FrameObservation

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "Tracking" / "configs"


def random_box(rng: np.random.Generator, extent: float = 100.0, max_side: float = 40.0) -> Box:
    return Box(
        x=float(rng.uniform(0, extent)),
        y=float(rng.uniform(0, extent)),
        w=float(rng.uniform(1, max_side)),
        h=float(rng.uniform(1, max_side)),
    )


def observation(frame: int, *scored: tuple[Box, float]) -> FrameObservation:
    candidates = [ScoredBox(box=box, score=score) for box, score in scored]
    return FrameObservation(frame=frame, max=candidates[0], candidates=candidates)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def gt_box() -> Box:
    return Box(x=0, y=0, w=10, h=10)
