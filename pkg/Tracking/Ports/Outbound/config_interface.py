from pydantic import BaseModel, ConfigDict
from abc import abstractmethod

from Tracking.Domain.evaluation import SubsetSpec


class ConfigSource(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @abstractmethod
    def load(self, path: str) -> dict:
        ...

    @abstractmethod
    def load_subsets(self, path: str) -> list[SubsetSpec]:
        ...
