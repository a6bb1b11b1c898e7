"""Frame-by-frame exercise repetition counting from pose keypoints, with an optical-flow fallback."""
from .engine import EngineConfig, ExerciseMoment, RepSession, Source, StepOutput, count_reps, transition
from .phases import MovementPhase, ThresholdBand, classify
from .pose import ExerciseKind, Keypoint, PoseFrame

__all__ = [
    "EngineConfig",
    "ExerciseKind",
    "ExerciseMoment",
    "Keypoint",
    "MovementPhase",
    "PoseFrame",
    "RepSession",
    "Source",
    "StepOutput",
    "ThresholdBand",
    "classify",
    "count_reps",
    "transition",
]
