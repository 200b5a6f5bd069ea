from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from Tracking.Ports.Outbound.image_interface import ImageStore


class OpenCVImageAdapter(ImageStore):
    """BGR uint8 rasters read and written with OpenCV."""

    def read(self, path: str) -> np.ndarray:
        raster = cv2.imread(path, cv2.IMREAD_COLOR)
        if raster is None:
            raise FileNotFoundError(f"cannot read image {path}")
        return raster

    def write(self, path: str, raster: np.ndarray) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        if not cv2.imwrite(path, raster):
            raise OSError(f"cannot write image {path}")
