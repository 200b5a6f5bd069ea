"""OTB-style text trajectories: one `x,y,w,h` line per frame."""

from __future__ import annotations

import logging
import re
from pathlib import Path

from pydantic import ValidationError

from Tracking.Domain.errors import StreamFormatError
from Tracking.Domain.geometry import Box
from Tracking.Ports.Outbound.trajectory_interface import TrajectoryStore

logger = logging.getLogger(__name__)

# OTB ground truth mixes commas, tabs and spaces
_SEPARATOR = re.compile(r"[,\s]+")


class OtbTrajectoryAdapter(TrajectoryStore):
    precision: int = 4

    def read(self, path: str) -> list[Box]:
        boxes = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    boxes.append(Box.from_list([float(v) for v in _SEPARATOR.split(line)]))
                except (ValueError, ValidationError) as e:
                    raise StreamFormatError(f"{path}:{lineno}: expected x,y,w,h") from e
        return boxes

    def write(self, path: str, boxes: list[Box]) -> None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8") as fh:
            for box in boxes:
                fh.write(",".join(f"{v:.{self.precision}f}" for v in box.as_list()) + "\n")
        logger.debug("wrote %d boxes to %s", len(boxes), path)
