from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import ndimage

from repcount.frames import GrayFrame
from repcount.pose import NUM_KEYPOINTS, Keypoint, PoseFrame

# criterion number -> (passed, summary line); filled by the acceptance suite
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def make_frame(t: float = 0.0, points=None, confidence: float = 1.0) -> PoseFrame:
    """Pose frame with every landmark at the origin-ish grid unless given."""
    points = points or {}
    kps = []
    for i in range(NUM_KEYPOINTS):
        if i in points:
            x, y, *rest = points[i]
            kps.append(Keypoint(float(x), float(y), float(rest[0]) if rest else confidence))
        else:
            kps.append(Keypoint(float(10 * i), float(5 * i), confidence))
    return PoseFrame(t, tuple(kps))


def smooth_texture(rng: np.random.Generator, shape, sigma: float = 3.0, contrast: float = 70.0) -> np.ndarray:
    noise = ndimage.gaussian_filter(rng.normal(size=shape), sigma)
    noise /= noise.std()
    return 128.0 + contrast * noise


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def translating_texture(shift=(0.0, 0.0), shape=(120, 160), seed=3, offset=0.0, timestamp=0.0) -> GrayFrame:
    """Band-limited analytic texture sampled at (x - sx, y - sy), so sub-pixel shifts are exact."""
    rng = np.random.default_rng(seed)
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    sx, sy = shift
    img = np.zeros(shape)
    for _ in range(6):
        wavelength = rng.uniform(10, 24)
        heading = rng.uniform(0, 2 * math.pi)
        phase = rng.uniform(0, 2 * math.pi)
        k = 2 * math.pi / wavelength
        img += np.sin(k * math.cos(heading) * (xx - sx) + k * math.sin(heading) * (yy - sy) + phase)
    img = 128.0 + offset + 25.0 * img
    return GrayFrame(np.clip(np.rint(img), 0, 255).astype(np.uint8), timestamp)


class CriterionRecorder:
    """Declare a criterion up front, report its outcome once measured."""

    def __init__(self):
        self.number = None
        self.title = ""
        self.reported = False

    def __call__(self, number: int, title: str) -> "CriterionRecorder":
        self.number, self.title = number, title
        return self

    def report(self, passed: bool, detail: str) -> None:
        line = f"criterion {self.number} [{'PASS' if passed else 'FAIL'}] {self.title}: {detail}"
        print(line)
        ACCEPTANCE[self.number] = (passed, line)
        self.reported = True


@pytest.fixture
def criterion():
    rec = CriterionRecorder()
    yield rec
    if rec.number is not None and not rec.reported:
        ACCEPTANCE[rec.number] = (False, f"criterion {rec.number} [FAIL] {rec.title}: error before measurement")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number][1])
