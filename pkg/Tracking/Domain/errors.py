# Tracking/Domain/errors.py
from __future__ import annotations


class TrackingError(ValueError):
    """Base class for domain errors. `code` is the stable machine-readable tag."""

    code: str = "tracking_error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class DegenerateBoxError(TrackingError):
    code = "degenerate_box"

    def __init__(self, message: str = "degenerate box") -> None:
        super().__init__(message)


class InvalidResponseFrameError(TrackingError):
    code = "invalid_response_frame"

    def __init__(self, detail: str = "") -> None:
        message = "invalid response frame"
        super().__init__(f"{message}: {detail}" if detail else message)


class NoCandidatesError(TrackingError):
    code = "no_candidates"

    def __init__(self, message: str = "no candidates") -> None:
        super().__init__(message)


class InnovationCovarianceError(TrackingError):
    code = "innovation_covariance"

    def __init__(self, message: str = "innovation covariance not invertible") -> None:
        super().__init__(message)


class NonContiguousStreamError(TrackingError):
    code = "non_contiguous_stream"


class LengthMismatchError(TrackingError):
    code = "length_mismatch"

    def __init__(self, trajectory_length: int, groundtruth_length: int) -> None:
        self.trajectory_length = trajectory_length
        self.groundtruth_length = groundtruth_length
        super().__init__(
            f"trajectory has {trajectory_length} frames but ground truth has {groundtruth_length}"
        )


class EmptyPoolError(TrackingError):
    code = "empty_pool"


class UnknownSequenceError(TrackingError):
    code = "unknown_sequence"

    def __init__(self, names: list[str]) -> None:
        self.names = sorted(names)
        super().__init__(f"unknown sequence(s): {', '.join(self.names)}")


class StreamFormatError(TrackingError):
    code = "format_error"


class ConfigError(TrackingError):
    code = "config_error"


class SessionNotFoundError(TrackingError):
    code = "session_not_found"

    def __init__(self, session_id: str) -> None:
        super().__init__(f"unknown session {session_id}")
