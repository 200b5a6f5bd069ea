from enum import Enum


class ImageDomain(str, Enum):
    UNDERWATER = "underwater"
    OPEN_AIR = "open-air"
