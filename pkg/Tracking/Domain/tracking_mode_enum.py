from enum import Enum


class TrackingMode(str, Enum):
    MBPP = "mbpp"
    DBPP = "dbpp"
