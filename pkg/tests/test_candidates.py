import numpy as np
import pytest

from conftest import random_box
from test_geometry import brute_force_nms
from Tracking.Domain import candidates
from Tracking.Domain.candidates import CandidateConfig, ResponseEntry, ResponseFrame
from Tracking.Domain.errors import ConfigError, InvalidResponseFrameError
from Tracking.Domain.geometry import Box, ScoredBox


def random_frame(rng: np.random.Generator, grid_size: int = 16) -> ResponseFrame:
    entries = [
        ResponseEntry(patch=i, score=float(rng.random()), box=random_box(rng, extent=200.0))
        for i in range(grid_size * grid_size)
    ]
    return ResponseFrame(frame=3, grid_size=grid_size, entries=entries)


def oracle(frame: ResponseFrame, n: int, threshold: float) -> list[ScoredBox]:
    ranked = sorted(frame.entries, key=lambda e: -e.score)[:n]
    return brute_force_nms([ScoredBox(box=e.box, score=e.score) for e in ranked], threshold)


def test_single_dominant_response():
    entries = [ResponseEntry(patch=i, score=0.0, box=Box(x=i, y=0, w=10, h=10)) for i in range(256)]
    entries[37] = ResponseEntry(patch=37, score=0.9, box=Box(x=100, y=100, w=20, h=20))
    found = candidates.extract(ResponseFrame(entries=entries), n=10, nms_threshold=0.5)
    assert len(found.items) >= 1
    assert found.top == ScoredBox(box=Box(x=100, y=100, w=20, h=20), score=0.9)


def test_extract_matches_oracle(rng):
    for _ in range(200):
        frame = random_frame(rng)
        n = int(rng.integers(1, 257))
        found = candidates.extract(frame, n, 0.5)
        assert found.items == oracle(frame, n, 0.5)
        assert found.n_requested == n
        assert len(found.items) <= n


def test_top_n_nesting(rng):
    for _ in range(50):
        frame = random_frame(rng)
        n1, n2 = sorted(int(v) for v in rng.integers(1, 257, 2))
        assert candidates.top_n(frame, n2)[:n1] == candidates.top_n(frame, n1)
        assert candidates.extract(frame, n1, 0.5).top == candidates.extract(frame, n2, 0.5).top


def test_first_item_is_max_response(rng):
    frame = random_frame(rng)
    best = max(frame.entries, key=lambda e: e.score)
    assert candidates.extract(frame, 40, 0.5).top.score == best.score


def test_ties_broken_by_patch_index():
    entries = [ResponseEntry(patch=i, score=0.5, box=Box(x=10 * i, y=0, w=5, h=5)) for i in range(4)]
    top = candidates.top_n(ResponseFrame(grid_size=2, entries=list(reversed(entries))), 2)
    assert [c.box.x for c in top] == [0, 10]


def test_wrong_entry_count():
    frame = ResponseFrame(grid_size=2, entries=[ResponseEntry(patch=0, score=0.1, box=Box(x=0, y=0, w=1, h=1))])
    with pytest.raises(InvalidResponseFrameError, match="invalid response frame"):
        candidates.extract(frame, 1, 0.5)


def test_duplicate_patch_index():
    box = Box(x=0, y=0, w=1, h=1)
    entries = [ResponseEntry(patch=0, score=0.1, box=box)] * 4
    with pytest.raises(InvalidResponseFrameError, match="duplicate"):
        ResponseFrame(grid_size=2, entries=entries).check()


def test_patch_index_out_of_range():
    box = Box(x=0, y=0, w=1, h=1)
    entries = [ResponseEntry(patch=i, score=0.1, box=box) for i in (0, 1, 2, 7)]
    with pytest.raises(InvalidResponseFrameError, match="out of range"):
        ResponseFrame(grid_size=2, entries=entries).check()


def test_n_out_of_range(rng):
    frame = random_frame(rng, grid_size=4)
    with pytest.raises(ConfigError):
        candidates.extract(frame, 0, 0.5)
    with pytest.raises(ConfigError, match="got 17"):
        candidates.extract(frame, 17, 0.5)


def test_presets():
    assert candidates.UOT100_CANDIDATES == CandidateConfig(n=40, nms_threshold=0.5)
    assert candidates.UTB180_CANDIDATES.n == 30
    assert CandidateConfig() == candidates.UOT100_CANDIDATES


def test_to_observation(rng):
    found = candidates.extract(random_frame(rng), 40, 0.5)
    obs = candidates.to_observation(5, found)
    assert obs.frame == 5
    assert obs.max_response == found.top
    assert obs.candidates == found.items


def test_response_frame_wire_form():
    record = {"frame": 2, "grid_size": 1, "entries": [{"patch": 0, "score": 0.4, "box": [1, 2, 3, 4]}]}
    frame = ResponseFrame.model_validate(record)
    assert frame.entries[0].patch_index == 0
    assert frame.model_dump(by_alias=True) == record
