"""
Synthetic workloads with known rep counts, and an independent counting oracle.

Joint angles follow a trapezoid per repetition: a hold at the extended pose,
a linear move to the contracted pose, a hold there, and a linear move back.
Each trace starts and ends at the extended pose. The oracle at the bottom of
this module shares no classification or state-machine code with the engine.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from . import pose as lm
from .frames import GrayFrame
from .phases import DEFAULT_BANDS, ThresholdBand
from .pose import ExerciseKind, Keypoint, PoseFrame

MARGIN_DEG = 5.0
GATE = 0.75

DEFAULT_ANGLES = {
    ExerciseKind.SQUAT: (90.0, 170.0),
    ExerciseKind.PUSH_UP: (90.0, 168.0),
    ExerciseKind.PULL_UP: (60.0, 170.0),
}


@dataclass(frozen=True)
class MotionProfile:
    exercise: ExerciseKind = ExerciseKind.SQUAT
    reps: int = 5
    period: float = 2.0  # seconds per rep
    angle_min: Optional[float] = None  # defaults per exercise
    angle_max: Optional[float] = None
    hold_fraction: float = 0.2  # share of the period held at each extreme
    fps: float = 30.0
    noise_sigma: float = 0.0  # keypoint pixel noise
    dropout_rate: float = 0.0  # per-frame chance of a sub-gate landmark
    confidence_base: float = 0.95
    confidence_jitter: float = 0.0  # uniform +/- spread around the base, clipped to [0, 1]

    def __post_init__(self) -> None:
        lo, hi = DEFAULT_ANGLES[self.exercise]
        if self.angle_min is None:
            object.__setattr__(self, "angle_min", lo)
        if self.angle_max is None:
            object.__setattr__(self, "angle_max", hi)
        self.validate()

    @property
    def band(self) -> ThresholdBand:
        return DEFAULT_BANDS[self.exercise]

    def validate(self, band: Optional[ThresholdBand] = None) -> None:
        band = band or self.band
        problems = []
        if self.reps < 0:
            problems.append(f"reps must be >= 0, got {self.reps}")
        if self.period < 0.5:
            problems.append(f"period must be >= 0.5 s, got {self.period}")
        if self.fps < 10:
            problems.append(f"fps must be >= 10, got {self.fps}")
        if not 0.0 <= self.hold_fraction <= 0.4:
            problems.append(f"hold_fraction must lie in [0, 0.4], got {self.hold_fraction}")
        if not self.angle_min < band.lower - MARGIN_DEG:
            problems.append(
                f"angle_min {self.angle_min} must be below lower threshold - {MARGIN_DEG:g} ({band.lower - MARGIN_DEG:g})"
            )
        if not band.upper + MARGIN_DEG < self.angle_max <= 180.0:
            problems.append(
                f"angle_max {self.angle_max} must exceed upper threshold + {MARGIN_DEG:g} ({band.upper + MARGIN_DEG:g}) and be <= 180"
            )
        if self.angle_min <= 0:
            problems.append("angle_min must be positive")
        if self.noise_sigma < 0:
            problems.append("noise_sigma must be >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            problems.append(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if not 0.0 <= self.confidence_base <= 1.0 or self.confidence_jitter < 0:
            problems.append("confidence_base must lie in [0, 1] and confidence_jitter >= 0")
        if problems:
            raise ValueError("invalid motion profile: " + "; ".join(problems))

    @property
    def n_frames(self) -> int:
        return int(round(self.reps * self.period * self.fps)) + 1


def angle_at(profile: MotionProfile, t: float) -> float:
    """Trapezoidal joint angle at time ``t`` (clamped to the set's duration)."""
    total = profile.reps * profile.period
    t = min(max(t, 0.0), total)
    if t >= total:
        return profile.angle_max
    s = (t % profile.period) / profile.period
    h = profile.hold_fraction
    move = (1.0 - 2.0 * h) / 2.0
    hi, lo = profile.angle_max, profile.angle_min
    edges = (h / 2, h / 2 + move, h / 2 + move + h, h / 2 + 2 * move + h)
    if s < edges[0]:
        return hi
    if s < edges[1]:
        return hi - (hi - lo) * (s - edges[0]) / move
    if s < edges[2]:
        return lo
    if s < edges[3]:
        return lo + (hi - lo) * (s - edges[2]) / move
    return hi


def angle_series(profile: MotionProfile) -> np.ndarray:
    return np.array([angle_at(profile, i / profile.fps) for i in range(profile.n_frames)])


# --- pose traces -----------------------------------------------------------

# Segment lengths in pixels; every gated limb spans more than 200 px.
_THIGH, _SHIN = 230.0, 220.0
_UPPER_ARM, _FOREARM = 210.0, 205.0
_SIDE_OFFSET = 36.0  # horizontal gap between left and right limbs


def _rot(vx: float, vy: float, deg: float) -> tuple[float, float]:
    r = math.radians(deg)
    c, s = math.cos(r), math.sin(r)
    return vx * c - vy * s, vx * s + vy * c


def _limb(anchor, toward_vertex_deg: float, theta: float, near: float, far: float, bend: float):
    """Place vertex and root so the internal angle at the vertex is ``theta``.

    ``toward_vertex_deg`` is the image-plane heading from the anchor to the
    vertex; ``bend`` (+1/-1) picks the side the root swings to.
    """
    ux, uy = math.cos(math.radians(toward_vertex_deg)), math.sin(math.radians(toward_vertex_deg))
    vertex = (anchor[0] + near * ux, anchor[1] + near * uy)
    # vector vertex -> anchor, rotated by theta, points vertex -> root
    rx, ry = _rot(-ux, -uy, bend * theta)
    root = (vertex[0] + far * rx, vertex[1] + far * ry)
    return vertex, root


def _skeleton(exercise: ExerciseKind, theta: float) -> list[tuple[float, float]]:
    pts = [(0.0, 0.0)] * lm.NUM_KEYPOINTS
    if exercise is ExerciseKind.SQUAT:
        # side-on squat: ankles fixed, knees travel forward (+x) as theta closes
        lean = (180.0 - theta) / 2.0
        for sign, (hip_i, knee_i, ankle_i) in ((1, (24, 26, 28)), (-1, (23, 25, 27))):
            ankle = (540.0 + sign * _SIDE_OFFSET / 2, 1700.0)
            knee, hip = _limb(ankle, -90.0 + lean, theta, _SHIN, _THIGH, 1.0)
            pts[ankle_i], pts[knee_i], pts[hip_i] = ankle, knee, hip
        hip = ((pts[23][0] + pts[24][0]) / 2, (pts[23][1] + pts[24][1]) / 2)
        torso_top = (hip[0] + 40.0, hip[1] - 300.0)
        for i, dx in ((11, -_SIDE_OFFSET / 2), (12, _SIDE_OFFSET / 2)):
            pts[i] = (torso_top[0] + dx, torso_top[1])
        for i, dx in ((13, -20.0), (14, 20.0)):
            pts[i] = (torso_top[0] + 150.0 + dx, torso_top[1] + 20.0)
        for i, dx in ((15, -20.0), (16, 20.0)):
            pts[i] = (torso_top[0] + 290.0 + dx, torso_top[1] + 30.0)
        head = (torso_top[0] + 10.0, torso_top[1] - 110.0)
        root_for_feet = {27: pts[27], 28: pts[28]}
    else:
        pullup = exercise is ExerciseKind.PULL_UP
        for sign, (sh_i, el_i, wr_i) in ((1, (12, 14, 16)), (-1, (11, 13, 15))):
            if pullup:
                # hands on a bar overhead, body hangs below
                wrist = (540.0 + sign * 160.0, 300.0)
                elbow, shoulder = _limb(wrist, 90.0 - sign * 15.0, theta, _FOREARM, _UPPER_ARM, -sign)
            else:
                # side-on push-up: hands on the floor, shoulder above
                wrist = (700.0 + sign * _SIDE_OFFSET / 2, 1500.0)
                elbow, shoulder = _limb(wrist, -90.0 + (180.0 - theta) / 2.0, theta, _FOREARM, _UPPER_ARM, -1.0)
            pts[wr_i], pts[el_i], pts[sh_i] = wrist, elbow, shoulder
        sh = ((pts[11][0] + pts[12][0]) / 2, (pts[11][1] + pts[12][1]) / 2)
        if pullup:
            hip = (sh[0], sh[1] + 320.0)
            pts[23], pts[24] = (hip[0] - 60.0, hip[1]), (hip[0] + 60.0, hip[1])
            pts[25], pts[26] = (hip[0] - 60.0, hip[1] + 230.0), (hip[0] + 60.0, hip[1] + 230.0)
            pts[27], pts[28] = (hip[0] - 60.0, hip[1] + 450.0), (hip[0] + 60.0, hip[1] + 450.0)
            head = (sh[0], sh[1] - 120.0)
        else:
            hip = (sh[0] - 330.0, sh[1] + 60.0)
            pts[23], pts[24] = (hip[0] - 15.0, hip[1]), (hip[0] + 15.0, hip[1])
            pts[25], pts[26] = (hip[0] - 245.0, hip[1] + 70.0), (hip[0] - 215.0, hip[1] + 70.0)
            pts[27], pts[28] = (hip[0] - 460.0, hip[1] + 140.0), (hip[0] - 430.0, hip[1] + 140.0)
            head = (sh[0] + 110.0, sh[1] - 40.0)
        root_for_feet = {27: pts[27], 28: pts[28]}
    # face (0-10), hands (17-22), feet (29-32) around their parents
    face_offsets = [(0, 0), (-8, -10), (-14, -10), (-20, -10), (8, -10), (14, -10), (20, -10),
                    (-30, -4), (30, -4), (-10, 22), (10, 22)]
    for i, (ox, oy) in enumerate(face_offsets):
        pts[i] = (head[0] + ox, head[1] + oy)
    for i, parent, ox, oy in ((17, 15, -6, 18), (18, 16, 6, 18), (19, 15, 0, 24),
                              (20, 16, 0, 24), (21, 15, -12, 8), (22, 16, 12, 8)):
        pts[i] = (pts[parent][0] + ox, pts[parent][1] + oy)
    for i, parent, ox, oy in ((29, 27, -14, 16), (30, 28, -14, 16), (31, 27, 40, 20), (32, 28, 40, 20)):
        pts[i] = (root_for_feet[parent][0] + ox, root_for_feet[parent][1] + oy)
    return pts


def gen_pose_trace(profile: MotionProfile, seed: int) -> tuple[list[PoseFrame], int]:
    """Render the profile as a pose trace; returns (frames, ground-truth reps)."""
    profile.validate()
    rng = np.random.default_rng(seed)
    gated = sorted({i for t in lm.joint_triples(profile.exercise) for i in t})
    frames = []
    for i in range(profile.n_frames):
        t = i / profile.fps
        pts = np.array(_skeleton(profile.exercise, angle_at(profile, t)))
        if profile.noise_sigma > 0:
            pts = pts + rng.normal(0.0, profile.noise_sigma, size=pts.shape)
        conf = np.ones(lm.NUM_KEYPOINTS)
        base = profile.confidence_base
        if profile.confidence_jitter > 0:
            conf[gated] = base + rng.uniform(-profile.confidence_jitter, profile.confidence_jitter, len(gated))
        else:
            conf[gated] = base
        if profile.dropout_rate > 0 and rng.random() < profile.dropout_rate:
            conf[gated[int(rng.integers(len(gated)))]] = rng.uniform(0.05, GATE - 0.05)
        conf = np.clip(conf, 0.0, 1.0)
        xy = np.round(pts, 3).tolist()
        cs = np.round(conf, 4).tolist()
        keypoints = tuple(Keypoint(x, y, c) for (x, y), c in zip(xy, cs))
        frames.append(PoseFrame(round(t, 6), keypoints))
    return frames, profile.reps


def with_dropout(
    frames: Sequence[PoseFrame], start: float, end: float, exercise: ExerciseKind, confidence: float = 0.3
) -> list[PoseFrame]:
    """Copy of ``frames`` with every gated landmark set to ``confidence`` for start <= t < end."""
    gated = {i for t in lm.joint_triples(exercise) for i in t}
    out = []
    for f in frames:
        if start <= f.timestamp < end:
            kps = tuple(
                Keypoint(k.x, k.y, confidence) if i in gated else k for i, k in enumerate(f.keypoints)
            )
            f = PoseFrame(f.timestamp, kps)
        out.append(f)
    return out


# --- rendered frame sequences ---------------------------------------------


def _subject_texture(rng: np.random.Generator, n_waves: int = 6):
    waves = []
    for _ in range(n_waves):
        wavelength = rng.uniform(18.0, 40.0)
        heading = rng.uniform(0.0, math.pi)
        k = 2.0 * math.pi / wavelength
        waves.append((k * math.cos(heading), k * math.sin(heading), rng.uniform(0, 2 * math.pi)))
    amp = 100.0 / n_waves**0.5
    return waves, amp


def gen_frame_sequence(
    profile: MotionProfile,
    seed: int,
    size: tuple[int, int] = (320, 240),
    travel_px: float = 100.0,
    subject_size: tuple[int, int] = (110, 90),
) -> tuple[list[GrayFrame], list[tuple[float, float]]]:
    """Render a textured block moving vertically with the profile's motion.

    The block sits high at the extended pose for squats and push-ups (it
    moves down as the joint closes) and low for pull-ups. Returns frames and
    the exact per-frame (dx, dy) of the block relative to the previous frame
    ((0, 0) for the first frame).
    """
    profile.validate()
    width, height = size
    sw, sh = subject_size
    if travel_px < 0 or sh + travel_px > height - 8:
        raise ValueError(f"subject of height {sh} cannot travel {travel_px} px in a {height} px frame")
    rng = np.random.default_rng(seed)
    waves, amp = _subject_texture(rng)
    bg_waves, _ = _subject_texture(rng, 2)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    background = 70.0 + sum(3.0 * np.sin(kx * xx + ky * yy + ph) for kx, ky, ph in bg_waves)
    x0 = (width - sw) / 2.0
    rows = np.arange(height, dtype=np.float64)
    lx = np.arange(width, dtype=np.float64) - x0
    ax = np.clip(np.minimum(lx + 0.5, sw - lx + 0.5), 0.0, 1.0)
    lo, hi = profile.angle_min, profile.angle_max
    up_first = profile.exercise is ExerciseKind.PULL_UP
    top_y = 4.0

    def block_y(theta: float) -> float:
        closed = (hi - theta) / (hi - lo)
        return top_y + travel_px * ((1.0 - closed) if up_first else closed)

    frames, truth = [], []
    prev_y = None
    limit = 0.25 * height
    for i in range(profile.n_frames):
        t = i / profile.fps
        y = block_y(angle_at(profile, t))
        if prev_y is not None and abs(y - prev_y) > limit:
            raise ValueError(f"motion of {abs(y - prev_y):.1f} px/frame exceeds 25% of frame height")
        # texture is attached to the block; sample it in block coordinates.
        # Each wave is separable: sin(a + b) = sin a cos b + cos a sin b.
        ly = rows - y
        tex = np.zeros((height, width))
        for kx, ky, ph in waves:
            a = kx * lx + ph
            b = ky * ly
            tex += np.outer(np.cos(b), np.sin(a)) + np.outer(np.sin(b), np.cos(a))
        tex = 128.0 + amp * tex
        # 1 px soft edges keep sub-pixel positions exact
        ay = np.clip(np.minimum(ly + 0.5, sh - ly + 0.5), 0.0, 1.0)
        alpha = np.outer(ay, ax)
        img = alpha * tex + (1.0 - alpha) * background
        frames.append(GrayFrame(np.clip(np.rint(img), 0, 255).astype(np.uint8), round(t, 6)))
        truth.append((0.0, 0.0 if prev_y is None else y - prev_y))
        prev_y = y
    return frames, truth


# --- independent counting oracle -------------------------------------------

# One rep: leave the start hold, pass the far extreme, come back. The session
# begins at the extended pose, so the opening hold is implied by the prefix.
_REP = re.compile(r"I.*?B.*?I.*?T")


def pattern_count(labels: Iterable[str], start: str = "T") -> int:
    """Count T..I..B..I..T cycles in a string of 'T'/'I'/'B' labels by regex scan.

    ``start`` is the implied position before the first label: 'T' when the
    set begins at the top, 'B' when it begins at the bottom (a bottom start
    has already passed T, I and B of its first cycle).
    """
    text = "".join(labels)
    prefix = "T" if start == "T" else "TIB"
    return sum(1 for _ in _REP.finditer(prefix + text))


def brute_force_count(angles: Iterable[float], band: ThresholdBand) -> int:
    """Reference rep count for an angle series, built without the engine.

    Inverted bands (pull-ups) start hanging, which is the bottom of the cycle.
    """
    low_label, high_label = ("T", "B") if band.inverted else ("B", "T")
    labels = []
    for a in angles:
        if a < band.lower:
            labels.append(low_label)
        elif a > band.upper:
            labels.append(high_label)
        else:
            labels.append("I")
    return pattern_count(labels, start="B" if band.inverted else "T")


# --- manifest ----------------------------------------------------------------

MANIFEST_FIELDS = ("label", "seed") + tuple(f.name for f in fields(MotionProfile))


def manifest_row(label: str, profile: MotionProfile, seed: int) -> dict:
    row = asdict(profile)
    row["exercise"] = profile.exercise.value
    row.update(label=label, seed=seed)
    return row


def write_manifest(rows: Iterable[dict], sink) -> None:
    """Tab-separated, one header line, one row per generated item."""
    writer = csv.DictWriter(sink, fieldnames=MANIFEST_FIELDS, delimiter="\t", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_manifest(source) -> list[dict]:
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.DictReader((line for line in source if not line.startswith("#")), delimiter="\t")
    if reader.fieldnames is None or "label" not in reader.fieldnames or "reps" not in reader.fieldnames:
        raise ValueError("manifest needs 'label' and 'reps' columns")
    return list(reader)


def profile_from_row(row: dict) -> MotionProfile:
    kinds = {f.name: f.type for f in fields(MotionProfile)}
    kwargs = {}
    for name in kinds:
        if name not in row or row[name] in ("", None):
            continue
        value = row[name]
        if name == "exercise":
            kwargs[name] = ExerciseKind.parse(value)
        elif name == "reps":
            kwargs[name] = int(value)
        else:
            kwargs[name] = float(value)
    return MotionProfile(**kwargs)
