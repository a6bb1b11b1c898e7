"""
Sparse Lucas-Kanade optical flow and its conversion to movement phases.

Image coordinates have their origin at the top-left corner, so a negative
vertical displacement (dy < 0) is upward motion.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .frames import GrayFrame
from .phases import MajorityWindow, MovementPhase

CONVERGENCE_PX = 0.01
_CORNER_BLOCK = 5


class FlowDirection(enum.Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"
    STATIONARY = "stationary"


@dataclass(frozen=True)
class FlowConfig:
    movement_threshold: float = 5.0  # pixels/frame along the movement axis
    reseed_interval: int = 5  # frames between feature re-selection
    lk_window: int = 21  # odd patch side in pixels
    lk_iterations: int = 20
    min_eigen: float = 10.0  # corner score floor, intensity^2/px^2
    axis: str = "vertical"
    smoothing_capacity: int = 3
    max_points: int = 100
    min_distance: int = 8  # non-maximum suppression radius, pixels
    lk_min_eigen: float = 1.0  # below this the LK system is treated as singular

    def __post_init__(self) -> None:
        if not self.movement_threshold > 0:
            raise ValueError("movement_threshold must be > 0")
        if self.lk_window < 5 or self.lk_window % 2 == 0:
            raise ValueError(f"lk_window must be odd and >= 5, got {self.lk_window}")
        if self.reseed_interval < 1:
            raise ValueError("reseed_interval must be >= 1")
        if self.lk_iterations < 1:
            raise ValueError("lk_iterations must be >= 1")
        if self.axis not in ("vertical", "horizontal"):
            raise ValueError(f"axis must be 'vertical' or 'horizontal', got {self.axis!r}")
        if self.smoothing_capacity < 1:
            raise ValueError("smoothing_capacity must be >= 1")
        if self.max_points < 1 or self.min_distance < 1:
            raise ValueError("max_points and min_distance must be >= 1")
        if self.min_eigen < 0 or self.lk_min_eigen < 0:
            raise ValueError("eigenvalue thresholds must be non-negative")


@dataclass(frozen=True)
class TrackedPoint:
    x: float
    y: float
    dx: float = 0.0
    dy: float = 0.0
    valid: bool = True


def _as_float(frame: GrayFrame) -> np.ndarray:
    return frame.pixels.astype(np.float32)


def corner_scores(image: np.ndarray) -> np.ndarray:
    """Minimum eigenvalue of the box-averaged gradient structure tensor per pixel."""
    img = image.astype(np.float32, copy=False)
    gx = ndimage.sobel(img, axis=1, mode="nearest") / 8.0
    gy = ndimage.sobel(img, axis=0, mode="nearest") / 8.0
    sxx = ndimage.uniform_filter(gx * gx, _CORNER_BLOCK, mode="nearest")
    syy = ndimage.uniform_filter(gy * gy, _CORNER_BLOCK, mode="nearest")
    sxy = ndimage.uniform_filter(gx * gy, _CORNER_BLOCK, mode="nearest")
    half_trace = 0.5 * (sxx + syy)
    return half_trace - np.sqrt(0.25 * (sxx - syy) ** 2 + sxy * sxy)


def seed_features(frame: GrayFrame, config: FlowConfig) -> list[TrackedPoint]:
    """Pick up to ``max_points`` strong corners, at least ``min_distance`` apart.

    Points closer than half an LK window to the border are not seeded.
    """
    scores = corner_scores(frame.pixels)
    margin = config.lk_window // 2 + 1
    h, w = scores.shape
    if h <= 2 * margin or w <= 2 * margin:
        return []
    scores[:margin, :] = 0.0
    scores[-margin:, :] = 0.0
    scores[:, :margin] = 0.0
    scores[:, -margin:] = 0.0
    local_max = ndimage.maximum_filter(scores, size=2 * config.min_distance + 1, mode="constant")
    ys, xs = np.nonzero((scores >= local_max) & (scores >= config.min_eigen) & (scores > 0))
    if len(xs) == 0:
        return []
    order = np.argsort(-scores[ys, xs], kind="stable")
    min_d2 = config.min_distance**2
    kept_x: list[int] = []
    kept_y: list[int] = []
    # Plateaus of equal score survive the maximum filter together; enforce spacing greedily.
    for i in order:
        x, y = int(xs[i]), int(ys[i])
        if kept_x:
            d2 = (np.asarray(kept_x) - x) ** 2 + (np.asarray(kept_y) - y) ** 2
            if d2.min() < min_d2:
                continue
        kept_x.append(x)
        kept_y.append(y)
        if len(kept_x) >= config.max_points:
            break
    return [TrackedPoint(float(x), float(y)) for x, y in zip(kept_x, kept_y)]


def _patches(img: np.ndarray, xs: np.ndarray, ys: np.ndarray, half: int) -> np.ndarray:
    """Bilinear samples of the square patch of radius ``half`` around each point.

    Samples outside the image take the nearest edge value. Returns an
    ``(n, (2*half+1)**2)`` array in row-major patch order.
    """
    h, w = img.shape
    n = len(xs)
    # keep wildly diverged estimates finite before flooring
    xs = np.clip(np.nan_to_num(xs, nan=-1.0), -2.0 * w, 3.0 * w)
    ys = np.clip(np.nan_to_num(ys, nan=-1.0), -2.0 * h, 3.0 * h)
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = (xs - x0)[:, None, None]
    fy = (ys - y0)[:, None, None]
    span = np.arange(-half, half + 2)
    cols = np.clip(x0.astype(np.intp)[:, None] + span, 0, w - 1)
    rows = np.clip(y0.astype(np.intp)[:, None] + span, 0, h - 1)
    grid = img[rows[:, :, None], cols[:, None, :]]
    top = grid[:, :-1, :-1] * (1.0 - fx) + grid[:, :-1, 1:] * fx
    bottom = grid[:, 1:, :-1] * (1.0 - fx) + grid[:, 1:, 1:] * fx
    return (top * (1.0 - fy) + bottom * fy).reshape(n, -1)


def track(
    prev: np.ndarray,
    cur: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    config: FlowConfig,
    grad: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Array form of :func:`lk_step`: returns (dx, dy, valid) per point.

    ``prev``/``cur`` are float images. Solves the 2x2 LK normal equations on a
    ``lk_window`` square patch, iterating on the displacement until the update
    falls below 0.01 px or ``lk_iterations`` is reached.
    """
    h, w = prev.shape
    n = len(xs)
    dx = np.zeros(n)
    dy = np.zeros(n)
    if n == 0:
        return dx, dy, np.zeros(0, dtype=bool)
    if grad is None:
        gy_img, gx_img = np.gradient(prev)
    else:
        gx_img, gy_img = grad
    half = config.lk_window // 2
    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)

    template = _patches(prev, xs, ys, half)
    gx = _patches(gx_img, xs, ys, half)
    gy = _patches(gy_img, xs, ys, half)
    k = float(config.lk_window**2)
    gxx = (gx * gx).sum(axis=1)
    gyy = (gy * gy).sum(axis=1)
    gxy = (gx * gy).sum(axis=1)
    det = gxx * gyy - gxy * gxy
    min_eig = 0.5 * (gxx + gyy) - np.sqrt(0.25 * (gxx - gyy) ** 2 + gxy * gxy)
    valid = inside & (min_eig / k >= config.lk_min_eigen) & (det > 0)
    safe_det = np.where(valid, det, 1.0)

    active = valid.copy()
    for _ in range(config.lk_iterations):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        warped = _patches(cur, xs[idx] + dx[idx], ys[idx] + dy[idx], half)
        diff = warped - template[idx]
        bx = -(gx[idx] * diff).sum(axis=1)
        by = -(gy[idx] * diff).sum(axis=1)
        ux = (gyy[idx] * bx - gxy[idx] * by) / safe_det[idx]
        uy = (gxx[idx] * by - gxy[idx] * bx) / safe_det[idx]
        dx[idx] += ux
        dy[idx] += uy
        active[idx] = np.hypot(ux, uy) >= CONVERGENCE_PX

    nx = xs + dx
    ny = ys + dy
    valid &= np.isfinite(dx) & np.isfinite(dy)
    valid &= (nx >= 0) & (nx <= w - 1) & (ny >= 0) & (ny <= h - 1)
    dx[~valid] = 0.0
    dy[~valid] = 0.0
    return dx, dy, valid


def lk_step(
    prev: GrayFrame, cur: GrayFrame, points: Sequence[TrackedPoint], config: FlowConfig
) -> list[TrackedPoint]:
    """Track ``points`` from ``prev`` into ``cur``.

    Each returned point keeps its position in ``prev`` and carries the
    estimated displacement; invalid points (singular patch, left the frame)
    get zero displacement.
    """
    if prev.pixels.shape != cur.pixels.shape:
        raise ValueError(f"frame size mismatch: {prev.pixels.shape} vs {cur.pixels.shape}")
    xs = np.array([p.x for p in points], dtype=np.float64)
    ys = np.array([p.y for p in points], dtype=np.float64)
    dx, dy, valid = track(_as_float(prev), _as_float(cur), xs, ys, config)
    return [
        TrackedPoint(float(x), float(y), float(u), float(v), bool(ok))
        for x, y, u, v, ok in zip(xs, ys, dx, dy, valid)
    ]


def aggregate_direction(points: Sequence[TrackedPoint], config: FlowConfig) -> FlowDirection:
    """Majority sign of the axis displacement over valid points that moved enough.

    Displacement across the movement axis is ignored. An exact tie between
    the two signs, or no surviving points, is Stationary.
    """
    vertical = config.axis == "vertical"
    negative = positive = 0
    for p in points:
        if not p.valid:
            continue
        d = p.dy if vertical else p.dx
        if abs(d) < config.movement_threshold:
            continue
        if d < 0:
            negative += 1
        else:
            positive += 1
    if negative > positive:
        return FlowDirection.UP if vertical else FlowDirection.LEFT
    if positive > negative:
        return FlowDirection.DOWN if vertical else FlowDirection.RIGHT
    return FlowDirection.STATIONARY


def smooth_direction(window: MajorityWindow, direction: FlowDirection) -> FlowDirection:
    return window.push(direction)


_UP, _DOWN, _STILL = FlowDirection.UP, FlowDirection.DOWN, FlowDirection.STATIONARY
_TOP, _MID, _BOTTOM = MovementPhase.TOP, MovementPhase.INTERMEDIATE, MovementPhase.BOTTOM

# (current flow, previous flow, previous phase or None for any) -> phase
FLOW_PHASE_TABLE: tuple[tuple[FlowDirection, FlowDirection, Optional[MovementPhase], MovementPhase], ...] = (
    (_UP, _STILL, _BOTTOM, _MID),
    (_UP, _UP, None, _MID),
    (_DOWN, _STILL, _TOP, _MID),
    (_DOWN, _DOWN, None, _MID),
    (_STILL, _STILL, _BOTTOM, _BOTTOM),
    (_STILL, _DOWN, _MID, _BOTTOM),
    (_STILL, _STILL, _TOP, _TOP),
    (_STILL, _UP, _MID, _TOP),
)


def flow_to_phase(
    current: FlowDirection, previous: FlowDirection, previous_phase: MovementPhase
) -> MovementPhase:
    """Vertical-exercise conversion; combinations outside the table keep ``previous_phase``."""
    for cur, prev, prev_phase, out in FLOW_PHASE_TABLE:
        if cur is current and prev is previous and (prev_phase is None or prev_phase is previous_phase):
            return out
    return previous_phase


@dataclass
class FlowTracker:
    """Per-session flow state: tracked points, direction window, previous direction."""

    config: FlowConfig = field(default_factory=FlowConfig)

    def __post_init__(self) -> None:
        self.window: MajorityWindow[FlowDirection] = MajorityWindow(self.config.smoothing_capacity)
        self.reset()

    def reset(self) -> None:
        self.window.clear()
        self.previous_direction = FlowDirection.STATIONARY
        self._xs = np.zeros(0)
        self._ys = np.zeros(0)
        self._since_seed = 0
        self._last_timestamp: Optional[float] = None
        self.last_points: list[TrackedPoint] = []
        self.last_raw = FlowDirection.STATIONARY

    def _seed(self, frame: GrayFrame) -> None:
        seeds = seed_features(frame, self.config)
        self._xs = np.array([p.x for p in seeds], dtype=np.float64)
        self._ys = np.array([p.y for p in seeds], dtype=np.float64)
        self._since_seed = 0

    def update(self, prev: GrayFrame, cur: GrayFrame, previous_phase: MovementPhase) -> MovementPhase:
        """Consume one frame pair and return the movement phase looked up in ``FLOW_PHASE_TABLE``."""
        if prev.pixels.shape != cur.pixels.shape:
            raise ValueError(f"frame size mismatch: {prev.pixels.shape} vs {cur.pixels.shape}")
        continuous = self._last_timestamp is not None and prev.timestamp == self._last_timestamp
        if not continuous or len(self._xs) == 0 or self._since_seed >= self.config.reseed_interval:
            self._seed(prev)
        dx, dy, valid = track(_as_float(prev), _as_float(cur), self._xs, self._ys, self.config)
        self.last_points = [
            TrackedPoint(float(x), float(y), float(u), float(v), bool(ok))
            for x, y, u, v, ok in zip(self._xs, self._ys, dx, dy, valid)
        ]
        raw = aggregate_direction(self.last_points, self.config)
        smoothed = smooth_direction(self.window, raw)
        phase = flow_to_phase(smoothed, self.previous_direction, previous_phase)
        self.last_raw = raw
        self.previous_direction = smoothed
        self._xs = (self._xs + dx)[valid]
        self._ys = (self._ys + dy)[valid]
        self._since_seed += 1
        self._last_timestamp = cur.timestamp
        return phase
