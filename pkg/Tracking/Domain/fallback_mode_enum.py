from enum import Enum


class FallbackMode(str, Enum):
    MAX_RESPONSE = "max_response"
    ESTIMATION_BOX = "estimation_box"
