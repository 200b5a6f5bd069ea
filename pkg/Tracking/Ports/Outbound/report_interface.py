from pydantic import BaseModel, ConfigDict
from abc import abstractmethod

from Tracking.Domain.evaluation import EvalCurve, EvalReport


class ReportStore(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @abstractmethod
    def write_report(self, path: str, report: EvalReport) -> None:
        ...

    @abstractmethod
    def read_report(self, path: str) -> EvalReport:
        ...

    @abstractmethod
    def write_rows_csv(self, path: str, rows: list[dict]) -> None:
        ...

    @abstractmethod
    def write_curve_csv(self, path: str, curve: EvalCurve) -> None:
        ...

    @abstractmethod
    def write_text(self, path: str, text: str) -> None:
        ...
