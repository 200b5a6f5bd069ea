from pydantic import BaseModel, ConfigDict
from abc import abstractmethod

from Tracking.Domain.candidates import ResponseFrame
from Tracking.Domain.mbpp import FrameObservation, StreamHeader

StreamRecord = FrameObservation | ResponseFrame


class CandidateStream(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @abstractmethod
    def read(self, path: str) -> tuple[StreamHeader, list[StreamRecord]]:
        ...

    @abstractmethod
    def write(self, path: str, header: StreamHeader, records: list[StreamRecord]) -> None:
        ...
