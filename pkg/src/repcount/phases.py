"""Angle thresholding into movement phases, and sliding-window smoothing."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Generic, Hashable, Iterable, TypeVar

from .pose import ExerciseKind


class MovementPhase(enum.Enum):
    TOP = "top"
    INTERMEDIATE = "intermediate"
    BOTTOM = "bottom"


@dataclass(frozen=True)
class ThresholdBand:
    """Lower/upper angle bounds in degrees; ``inverted`` swaps Top and Bottom."""

    lower: float
    upper: float
    inverted: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.lower < self.upper < 180.0:
            raise ValueError(
                f"threshold band needs 0 < lower < upper < 180, got ({self.lower}, {self.upper})"
            )


DEFAULT_BANDS = {
    ExerciseKind.SQUAT: ThresholdBand(130.0, 150.0),
    ExerciseKind.PUSH_UP: ThresholdBand(130.0, 150.0),
    ExerciseKind.PULL_UP: ThresholdBand(100.0, 150.0, inverted=True),
}


def classify(angle: float, band: ThresholdBand) -> MovementPhase:
    """Map a joint angle to a phase; angles exactly on a bound are Intermediate."""
    if angle < band.lower:
        return MovementPhase.TOP if band.inverted else MovementPhase.BOTTOM
    if angle > band.upper:
        return MovementPhase.BOTTOM if band.inverted else MovementPhase.TOP
    return MovementPhase.INTERMEDIATE


T = TypeVar("T", bound=Hashable)


class MajorityWindow(Generic[T]):
    """Ring buffer of categorical labels that reports their majority.

    Ties go to whichever tied label was pushed most recently, so a
    capacity-1 window passes its input straight through.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"window capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._entries: deque[T] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> tuple[T, ...]:
        return tuple(self._entries)

    def clear(self) -> None:
        self._entries.clear()

    def extend(self, labels: Iterable[T]) -> None:
        self._entries.extend(labels)

    def majority(self) -> T:
        if not self._entries:
            raise ValueError("majority of an empty window")
        entries = self._entries
        if len(entries) == 1:
            return entries[0]
        # newest first, strict '>' so the most recent label wins a tie
        best, best_count = entries[-1], 0
        for label in reversed(entries):
            n = entries.count(label)
            if n > best_count:
                best, best_count = label, n
        return best

    def push(self, label: T) -> T:
        self._entries.append(label)
        return self.majority()


PhaseWindow = MajorityWindow[MovementPhase]


def smooth(window: MajorityWindow, phase: MovementPhase) -> MovementPhase:
    return window.push(phase)
