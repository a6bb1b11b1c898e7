"""
Per-frame repetition counting.

Each step picks a movement phase from the pose (when every gated landmark is
confident) or from optical flow (otherwise), feeds it through the four-state
exercise cycle, and bumps the counter when a cycle closes. Pose detections
that stay below the confidence gate for longer than the pause timeout freeze
the cycle until a confident pose returns.

Debug log format (one line per step, tab-separated, ``#`` header)::

    t  source  angle  raw_phase  phase  moment  count  paused

``t`` has six decimals, ``angle`` three decimals or ``-`` when no pose angle
was measured, ``raw_phase`` is ``-`` when no phase was produced this step,
``paused`` is ``0`` or ``1``. Enum fields use their lowercase values.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional, Sequence

from .flow import FlowConfig, FlowTracker
from .frames import GrayFrame
from .kinematics import SIDES, DegenerateGeometryError, exercise_angle
from .phases import DEFAULT_BANDS, MajorityWindow, MovementPhase, ThresholdBand, classify, smooth
from .pose import ExerciseKind, PoseFrame, confidence_gate, joint_triples


class ExerciseMoment(enum.Enum):
    TOP_HOLD = "top_hold"
    DESCENDING = "descending"
    BOTTOM_HOLD = "bottom_hold"
    ASCENDING = "ascending"


class Source(enum.Enum):
    POSE = "pose"
    FLOW = "flow"
    NONE = "none"


_TOP, _MID, _BOTTOM = MovementPhase.TOP, MovementPhase.INTERMEDIATE, MovementPhase.BOTTOM

_NEXT = {
    (ExerciseMoment.TOP_HOLD, _MID): ExerciseMoment.DESCENDING,
    (ExerciseMoment.DESCENDING, _BOTTOM): ExerciseMoment.BOTTOM_HOLD,
    (ExerciseMoment.BOTTOM_HOLD, _MID): ExerciseMoment.ASCENDING,
    (ExerciseMoment.ASCENDING, _TOP): ExerciseMoment.TOP_HOLD,
}


def transition(moment: ExerciseMoment, phase: MovementPhase) -> tuple[ExerciseMoment, bool]:
    """Advance the cycle; returns (new moment, whether a rep completed).

    Only the four forward edges exist. Any other input leaves the moment as is.
    """
    nxt = _NEXT.get((moment, phase))
    if nxt is None:
        return moment, False
    return nxt, moment is ExerciseMoment.ASCENDING


def initial_moment(exercise: ExerciseKind) -> ExerciseMoment:
    # Pull-ups start hanging, which the inverted band labels Bottom.
    return ExerciseMoment.BOTTOM_HOLD if exercise is ExerciseKind.PULL_UP else ExerciseMoment.TOP_HOLD


def initial_phase(exercise: ExerciseKind) -> MovementPhase:
    return _BOTTOM if exercise is ExerciseKind.PULL_UP else _TOP


@dataclass(frozen=True)
class EngineConfig:
    threshold_band: ThresholdBand = DEFAULT_BANDS[ExerciseKind.SQUAT]
    confidence_threshold: float = 0.75
    pause_timeout: float = 1.5  # seconds
    phase_window_capacity: int = 1
    flow: FlowConfig = field(default_factory=FlowConfig)
    side: str = "mean"

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError(f"confidence_threshold must lie in [0, 1], got {self.confidence_threshold}")
        if not self.pause_timeout > 0:
            raise ValueError(f"pause_timeout must be > 0, got {self.pause_timeout}")
        if self.phase_window_capacity < 1:
            raise ValueError(f"phase_window_capacity must be >= 1, got {self.phase_window_capacity}")
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")

    @classmethod
    def for_exercise(cls, exercise: ExerciseKind, **overrides) -> "EngineConfig":
        overrides.setdefault("threshold_band", DEFAULT_BANDS[exercise])
        return cls(**overrides)


@dataclass(frozen=True)
class StepOutput:
    timestamp: float
    phase: MovementPhase
    moment: ExerciseMoment
    count: int
    paused: bool
    source: Source
    angle: Optional[float] = None
    raw_phase: Optional[MovementPhase] = None

    def log_line(self) -> str:
        angle = "-" if self.angle is None else f"{self.angle:.3f}"
        raw = "-" if self.raw_phase is None else self.raw_phase.value
        return "\t".join(
            (
                f"{self.timestamp:.6f}",
                self.source.value,
                angle,
                raw,
                self.phase.value,
                self.moment.value,
                str(self.count),
                "1" if self.paused else "0",
            )
        )


LOG_HEADER = "# t\tsource\tangle\traw_phase\tphase\tmoment\tcount\tpaused"


def parse_log_line(line: str) -> StepOutput:
    t, source, angle, raw, phase, moment, count, paused = line.rstrip("\n").split("\t")
    return StepOutput(
        timestamp=float(t),
        phase=MovementPhase(phase),
        moment=ExerciseMoment(moment),
        count=int(count),
        paused=paused == "1",
        source=Source(source),
        angle=None if angle == "-" else float(angle),
        raw_phase=None if raw == "-" else MovementPhase(raw),
    )


def read_debug_log(source: Iterable[str]) -> list[StepOutput]:
    return [parse_log_line(line) for line in source if line.strip() and not line.startswith("#")]


def write_debug_log(outputs: Iterable[StepOutput], sink: IO[str]) -> None:
    sink.write(LOG_HEADER + "\n")
    for out in outputs:
        sink.write(out.log_line() + "\n")


class RepSession:
    """Mutable pipeline state for one exercise set."""

    def __init__(self, exercise: ExerciseKind, config: Optional[EngineConfig] = None):
        self.exercise = exercise
        self.config = config or EngineConfig.for_exercise(exercise)
        self._triples = joint_triples(exercise)
        self.phase_window: MajorityWindow[MovementPhase] = MajorityWindow(self.config.phase_window_capacity)
        self.flow = FlowTracker(self.config.flow)
        self.reset()

    def reset(self, now: Optional[float] = None) -> "RepSession":
        """Back to the start of a set. ``now=None`` starts the pause clock at the next step."""
        self.count = 0
        self.moment = initial_moment(self.exercise)
        self.phase = initial_phase(self.exercise)
        self.phase_window.clear()
        self.flow.reset()
        self.last_confident = now
        self.last_now = now
        self.paused = False
        self._last_source = Source.NONE
        return self

    def snapshot(self) -> tuple:
        return (
            self.count,
            self.moment,
            self.phase,
            self.paused,
            self.last_confident,
            self.last_now,
            self._last_source,
            self.phase_window.entries,
            self.flow.window.entries,
            self.flow.previous_direction,
        )

    def step(
        self,
        pose: Optional[PoseFrame] = None,
        frames: Optional[tuple[GrayFrame, GrayFrame]] = None,
        now: Optional[float] = None,
    ) -> StepOutput:
        if pose is None and frames is None:
            raise ValueError("step needs a pose frame, a frame pair, or both")
        if now is None:
            now = pose.timestamp if pose is not None else frames[1].timestamp
        if self.last_now is not None and now < self.last_now:
            raise ValueError(f"time went backwards: {now} < {self.last_now}")
        if self.last_confident is None:
            self.last_confident = now
        self.last_now = now
        cfg = self.config

        angle = None
        if pose is not None and confidence_gate(pose, self._triples, cfg.confidence_threshold) is not None:
            try:
                angle = exercise_angle(pose, self.exercise, cfg.side)
            except DegenerateGeometryError:
                angle = None
        # Only a detector that reports low confidence ages the pause clock;
        # flow-only input (no pose stream) never pauses.
        if angle is not None or pose is None:
            self.last_confident = now
        paused = now - self.last_confident > cfg.pause_timeout
        if self.paused and not paused:
            self.phase_window.clear()
            self.flow.reset()
        self.paused = paused

        raw = None
        source = Source.NONE
        if angle is not None:
            raw = classify(angle, cfg.threshold_band)
            self.phase = smooth(self.phase_window, raw)
            source = Source.POSE
        elif frames is not None:
            if self._last_source is not Source.FLOW:
                self.flow.reset()
            raw = self.flow.update(frames[0], frames[1], self.phase)
            self.phase = raw
            source = Source.FLOW
        self._last_source = source

        if raw is not None and not paused:
            self.moment, counted = transition(self.moment, self.phase)
            if counted:
                self.count += 1
        return StepOutput(now, self.phase, self.moment, self.count, paused, source, angle, raw)

    def run_trace(self, frames: Iterable[PoseFrame]) -> Iterator[StepOutput]:
        for frame in frames:
            yield self.step(pose=frame)

    def run_frames(self, frames: Iterable[GrayFrame]) -> Iterator[StepOutput]:
        """Flow-only replay; the first frame only primes the pair."""
        prev = None
        for frame in frames:
            if prev is not None:
                yield self.step(frames=(prev, frame))
            prev = frame


def count_reps(
    exercise: ExerciseKind,
    trace: Sequence[PoseFrame] = (),
    frames: Sequence[GrayFrame] = (),
    config: Optional[EngineConfig] = None,
) -> list[StepOutput]:
    """Replay a pose trace and/or frame sequence, paired by index.

    With both inputs, step ``i`` gets ``trace[i]`` and the pair
    ``(frames[i-1], frames[i])``; the timestamp comes from the pose frame.
    """
    session = RepSession(exercise, config)
    if not frames:
        return list(session.run_trace(trace))
    if not trace:
        return list(session.run_frames(frames))
    outputs = []
    for i in range(max(len(trace), len(frames))):
        pose = trace[i] if i < len(trace) else None
        pair = (frames[i - 1], frames[i]) if 0 < i < len(frames) else None
        if pose is None and pair is None:
            continue
        now = pose.timestamp if pose is not None else None
        outputs.append(session.step(pose=pose, frames=pair, now=now))
    return outputs
