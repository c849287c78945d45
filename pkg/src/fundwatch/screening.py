"""Threshold screening: extract the suspicious subset V' of delta points.

Screening keeps every point whose delta1 and delta2 both clear their lower
thresholds (inclusive), so the expensive clustering loop runs once on a
small candidate set instead of repeatedly on the whole population.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InputError
from .features import DeltaPoint


@dataclass(frozen=True)
class ScreeningThresholds:
    """Lower bounds on (delta1, delta2); both default to the worked 0.4."""

    s: float = 0.4
    S_upper: float = 0.4

    def __post_init__(self) -> None:
        if not (0.0 <= self.s <= 1.0 and 0.0 <= self.S_upper <= 1.0):
            raise InputError(f"thresholds must lie in [0, 1], got s={self.s}, S={self.S_upper}")

    def accepts(self, point: DeltaPoint) -> bool:
        return point.delta1 >= self.s and point.delta2 >= self.S_upper


def screen(points: list[DeltaPoint], thresholds: ScreeningThresholds) -> list[DeltaPoint]:
    """Return exactly the points passing both thresholds, input order preserved.

    The returned list references the original point objects; nothing is copied.
    """
    return [p for p in points if thresholds.accepts(p)]
