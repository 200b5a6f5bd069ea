from enum import Enum


class UpdatePolicy(str, Enum):
    ALWAYS = "always"                # update with whatever box was emitted
    ACCEPTED_ONLY = "accepted_only"  # coast through relocated frames
