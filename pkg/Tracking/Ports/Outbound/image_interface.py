from pydantic import BaseModel, ConfigDict
from abc import abstractmethod

import numpy as np


class ImageStore(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @abstractmethod
    def read(self, path: str) -> np.ndarray:
        ...

    @abstractmethod
    def write(self, path: str, raster: np.ndarray) -> None:
        ...
