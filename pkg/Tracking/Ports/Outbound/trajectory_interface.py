from pydantic import BaseModel, ConfigDict
from abc import abstractmethod

from Tracking.Domain.geometry import Box


class TrajectoryStore(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @abstractmethod
    def read(self, path: str) -> list[Box]:
        ...

    @abstractmethod
    def write(self, path: str, boxes: list[Box]) -> None:
        ...
