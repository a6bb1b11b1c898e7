"""Internal joint angles from keypoint triples (cosine rule, 2D image plane)."""
from __future__ import annotations

import math
from typing import Sequence

from .pose import ExerciseKind, PoseFrame, joint_triples

SIDES = ("mean", "left", "right")


class DegenerateGeometryError(ValueError):
    """A limb vector has zero length, so the angle is undefined."""


def internal_angle(a: Sequence[float], vertex: Sequence[float], c: Sequence[float]) -> float:
    """Angle at ``vertex`` between the vectors to ``a`` and ``c``, in degrees [0, 180]."""
    ux, uy = a[0] - vertex[0], a[1] - vertex[1]
    vx, vy = c[0] - vertex[0], c[1] - vertex[1]
    nu = math.hypot(ux, uy)
    nv = math.hypot(vx, vy)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateGeometryError("zero-length limb vector")
    cos_theta = (ux * vx + uy * vy) / (nu * nv)
    # floating-point overshoot near collinearity
    cos_theta = max(-1.0, min(1.0, cos_theta))
    return math.degrees(math.acos(cos_theta))


def exercise_angle(frame: PoseFrame, exercise: ExerciseKind, side: str = "mean") -> float:
    """Joint angle driving the exercise's phase classification.

    ``side`` selects the mean of both limbs (default) or one limb only.
    The frame is expected to have passed the confidence gate.
    """
    right, left = joint_triples(exercise)
    if side == "right":
        chosen = [right]
    elif side == "left":
        chosen = [left]
    elif side == "mean":
        chosen = [right, left]
    else:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    kp = frame.keypoints
    angles = [
        internal_angle(
            (kp[t.first].x, kp[t.first].y),
            (kp[t.vertex].x, kp[t.vertex].y),
            (kp[t.last].x, kp[t.last].y),
        )
        for t in chosen
    ]
    return sum(angles) / len(angles)
