from enum import Enum


class BoxEncoding(str, Enum):
    CORNER = "corner"            # x, y, w, h
    CENTER = "center"            # cx, cy, w, h
    AREA_ASPECT = "area_aspect"  # u, v, s, r
