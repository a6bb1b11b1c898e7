"""
Pose-detection output contract and trace I/O.

A pose trace is UTF-8 text with one JSON object per line::

    {"t":0.0,"kp":[[x,y,c],[x,y,c],...]}

``t`` is the timestamp in seconds and ``kp`` holds exactly 33 ``[x, y, c]``
triples in the 33-landmark topology (image pixels, origin top-left,
``c`` the detection probability). ``write_trace`` emits compact separators and
``repr``-exact floats, so ``read_trace(write_trace(frames))`` is lossless.
"""
from __future__ import annotations

import enum
import io
import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, NamedTuple, Optional, Union

NUM_KEYPOINTS = 33

# Landmark indices used by the counter (33-point topology).
LEFT_SHOULDER = 11
RIGHT_SHOULDER = 12
LEFT_ELBOW = 13
RIGHT_ELBOW = 14
LEFT_WRIST = 15
RIGHT_WRIST = 16
LEFT_HIP = 23
RIGHT_HIP = 24
LEFT_KNEE = 25
RIGHT_KNEE = 26
LEFT_ANKLE = 27
RIGHT_ANKLE = 28


class TraceError(ValueError):
    """Base class for trace decoding failures; carries the 1-based line number."""

    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TraceParseError(TraceError):
    """The line is not a JSON object."""


class TraceSchemaError(TraceError):
    """The line is JSON but violates the record schema."""


@dataclass(frozen=True, slots=True)
class Keypoint:
    x: float
    y: float
    confidence: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"keypoint coordinates must be finite, got ({self.x}, {self.y})")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True, slots=True)
class PoseFrame:
    timestamp: float
    keypoints: tuple[Keypoint, ...]

    def __post_init__(self) -> None:
        if len(self.keypoints) != NUM_KEYPOINTS:
            raise ValueError(f"expected {NUM_KEYPOINTS} keypoints, got {len(self.keypoints)}")
        if not math.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")

    def __getitem__(self, index: int) -> Keypoint:
        return self.keypoints[index]


class ExerciseKind(enum.Enum):
    SQUAT = "squat"
    PUSH_UP = "pushup"
    PULL_UP = "pullup"

    @classmethod
    def parse(cls, text: str) -> "ExerciseKind":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown exercise {text!r}; expected one of squat, pushup, pullup")


class JointTriple(NamedTuple):
    """Three landmark indices; the angle is measured at ``vertex``."""

    first: int
    vertex: int
    last: int


_TRIPLES = {
    ExerciseKind.SQUAT: (
        JointTriple(RIGHT_HIP, RIGHT_KNEE, RIGHT_ANKLE),
        JointTriple(LEFT_HIP, LEFT_KNEE, LEFT_ANKLE),
    ),
    # Elbow internal angle: the upper-limb angle that sweeps the push-up and
    # pull-up threshold bands.
    ExerciseKind.PUSH_UP: (
        JointTriple(RIGHT_SHOULDER, RIGHT_ELBOW, RIGHT_WRIST),
        JointTriple(LEFT_SHOULDER, LEFT_ELBOW, LEFT_WRIST),
    ),
    ExerciseKind.PULL_UP: (
        JointTriple(RIGHT_SHOULDER, RIGHT_ELBOW, RIGHT_WRIST),
        JointTriple(LEFT_SHOULDER, LEFT_ELBOW, LEFT_WRIST),
    ),
}


def joint_triples(exercise: ExerciseKind) -> list[JointTriple]:
    """Right side first, then left."""
    return list(_TRIPLES[exercise])


def confidence_gate(
    frame: PoseFrame, triples: Iterable[JointTriple], threshold: float
) -> Optional[list[Keypoint]]:
    """Return the referenced keypoints if every one reaches ``threshold``, else None.

    All-or-nothing: a single weak landmark on either side rejects the frame.
    Keypoints are returned in triple order (first, vertex, last per triple).
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    selected = []
    for triple in triples:
        for index in triple:
            kp = frame.keypoints[index]
            if kp.confidence < threshold:
                return None
            selected.append(kp)
    return selected


def _decode_line(text: str, lineno: int) -> PoseFrame:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"invalid JSON ({exc.msg})", lineno) from None
    if not isinstance(record, dict):
        raise TraceParseError("record is not a JSON object", lineno)
    if "t" not in record or "kp" not in record:
        raise TraceSchemaError("record needs fields 't' and 'kp'", lineno)
    t = record["t"]
    kp = record["kp"]
    if isinstance(t, bool) or not isinstance(t, (int, float)) or not math.isfinite(t):
        raise TraceSchemaError(f"'t' must be a finite number, got {t!r}", lineno)
    if not isinstance(kp, list) or len(kp) != NUM_KEYPOINTS:
        n = len(kp) if isinstance(kp, list) else type(kp).__name__
        raise TraceSchemaError(f"'kp' must hold {NUM_KEYPOINTS} points, got {n}", lineno)
    points = []
    for i, item in enumerate(kp):
        if (
            not isinstance(item, list)
            or len(item) != 3
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in item)
        ):
            raise TraceSchemaError(f"keypoint {i} must be [x, y, c] numbers", lineno)
        try:
            points.append(Keypoint(float(item[0]), float(item[1]), float(item[2])))
        except ValueError as exc:
            raise TraceSchemaError(f"keypoint {i}: {exc}", lineno) from None
    return PoseFrame(float(t), tuple(points))


def read_trace(source: Union[IO[bytes], IO[str], Iterable[Union[bytes, str]]]) -> Iterator[PoseFrame]:
    """Yield frames from a line-delimited trace stream.

    Blank lines are skipped. Timestamps must be non-decreasing.
    """
    last_t = -math.inf
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                raise TraceParseError("not valid UTF-8", lineno) from None
        text = raw.strip()
        if not text:
            continue
        frame = _decode_line(text, lineno)
        if frame.timestamp < last_t:
            raise TraceSchemaError(
                f"timestamp {frame.timestamp} precedes previous {last_t}", lineno
            )
        last_t = frame.timestamp
        yield frame


def encode_frame(frame: PoseFrame) -> str:
    kp = [[p.x, p.y, p.confidence] for p in frame.keypoints]
    return json.dumps({"t": frame.timestamp, "kp": kp}, separators=(",", ":"))


def write_trace(frames: Iterable[PoseFrame], sink: Union[IO[bytes], IO[str]]) -> None:
    binary = not isinstance(sink, io.TextIOBase)
    for frame in frames:
        line = encode_frame(frame) + "\n"
        sink.write(line.encode("utf-8") if binary else line)


def load_trace(path) -> list[PoseFrame]:
    with open(path, "rb") as fh:
        return list(read_trace(fh))


def save_trace(frames: Iterable[PoseFrame], path) -> None:
    with open(path, "wb") as fh:
        write_trace(frames, fh)
