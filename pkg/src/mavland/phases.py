from enum import Enum


class MissionPhase(str, Enum):
    """Mission phases in their nominal order of progression."""

    APPROACH = "Approach"
    LANDING = "Landing"
    DESCENT = "Descent"
    DISARMED = "Disarmed"

    @property
    def rank(self) -> int:
        return _RANK[self]


_RANK = {p: i for i, p in enumerate(MissionPhase)}
