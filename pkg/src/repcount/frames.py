"""
Grayscale frames and their on-disk formats.

Two sequence formats are supported:

* A directory of binary PGM (``P5``, maxval 255) files named by zero-padded
  index (``000000.pgm``, ``000001.pgm``, ...). Each header may carry a
  ``# t=<seconds>`` comment; when absent the timestamp is ``index / fps``.

* A raw stream: a 24-byte little-endian header followed by the frames'
  row-major luminance bytes back to back::

      offset  size  field
      0       4     magic b"GRAY"
      4       4     width       (uint32)
      8       4     height      (uint32)
      12      4     frame count (uint32)
      16      8     fps         (float64)

  Frame ``i`` has timestamp ``i / fps``.
"""
from __future__ import annotations

import os
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

MIN_SIDE = 16
RAW_MAGIC = b"GRAY"
RAW_HEADER = struct.Struct("<4sIIId")


class FrameFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GrayFrame:
    pixels: np.ndarray  # (height, width) uint8
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        px = self.pixels
        if px.ndim != 2 or px.dtype != np.uint8:
            raise ValueError(f"pixels must be a 2-D uint8 array, got {px.dtype} {px.shape}")
        if px.shape[0] < MIN_SIDE or px.shape[1] < MIN_SIDE:
            raise ValueError(f"frame must be at least {MIN_SIDE}x{MIN_SIDE}, got {px.shape[1]}x{px.shape[0]}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_bytes(cls, data: bytes, width: int, height: int, timestamp: float = 0.0) -> "GrayFrame":
        if len(data) != width * height:
            raise ValueError(f"expected {width * height} bytes, got {len(data)}")
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width).copy(), timestamp)


def encode_pgm(frame: GrayFrame) -> bytes:
    header = f"P5\n# t={frame.timestamp!r}\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(frame.pixels).tobytes()


_T_COMMENT = re.compile(rb"#\s*t=(\S+)")


def decode_pgm(data: bytes, default_timestamp: float = 0.0) -> GrayFrame:
    # Header: magic, width, height, maxval as whitespace-separated tokens with
    # '#' comments allowed between them, then exactly one whitespace byte.
    pos = 0
    tokens: list[bytes] = []
    timestamp = default_timestamp
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise FrameFormatError("truncated PGM header")
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            end = n if end < 0 else end
            m = _T_COMMENT.match(data[pos:end])
            if m:
                try:
                    timestamp = float(m.group(1))
                except ValueError:
                    raise FrameFormatError(f"bad timestamp comment {m.group(1)!r}") from None
            pos = end
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise FrameFormatError(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FrameFormatError("non-integer PGM dimensions") from None
    if maxval != 255:
        raise FrameFormatError(f"only maxval 255 is supported, got {maxval}")
    pos += 1
    body = data[pos : pos + width * height]
    if len(body) != width * height:
        raise FrameFormatError(f"PGM body has {len(body)} bytes, expected {width * height}")
    return GrayFrame.from_bytes(body, width, height, timestamp)


def write_pgm_dir(frames: Iterable[GrayFrame], directory) -> int:
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    count = 0
    for i, frame in enumerate(frames):
        (path / f"{i:06d}.pgm").write_bytes(encode_pgm(frame))
        count += 1
    return count


def read_pgm_dir(directory, fps: float = 30.0) -> Iterator[GrayFrame]:
    path = Path(directory)
    if not path.is_dir():
        raise FileNotFoundError(f"no such frame directory: {path}")
    names = sorted(p for p in path.iterdir() if p.suffix.lower() == ".pgm" and p.stem.isdigit())
    for p in sorted(names, key=lambda p: int(p.stem)):
        try:
            yield decode_pgm(p.read_bytes(), default_timestamp=int(p.stem) / fps)
        except FrameFormatError as exc:
            raise FrameFormatError(f"{p.name}: {exc}") from None


def write_raw_stream(frames: list[GrayFrame], sink: BinaryIO, fps: float) -> None:
    if not frames:
        raise ValueError("raw stream needs at least one frame to fix its dimensions")
    h, w = frames[0].pixels.shape
    sink.write(RAW_HEADER.pack(RAW_MAGIC, w, h, len(frames), float(fps)))
    for frame in frames:
        if frame.pixels.shape != (h, w):
            raise ValueError("all frames in a raw stream must share dimensions")
        sink.write(np.ascontiguousarray(frame.pixels).tobytes())


def read_raw_stream(source: BinaryIO) -> Iterator[GrayFrame]:
    header = source.read(RAW_HEADER.size)
    if len(header) != RAW_HEADER.size:
        raise FrameFormatError("truncated raw stream header")
    magic, w, h, count, fps = RAW_HEADER.unpack(header)
    if magic != RAW_MAGIC:
        raise FrameFormatError(f"bad raw stream magic {magic!r}")
    if fps <= 0:
        raise FrameFormatError(f"fps must be positive, got {fps}")
    size = w * h
    for i in range(count):
        data = source.read(size)
        if len(data) != size:
            raise FrameFormatError(f"raw stream truncated in frame {i}")
        yield GrayFrame.from_bytes(data, w, h, i / fps)


def load_frames(path, fps: float = 30.0) -> Iterator[GrayFrame]:
    """Read a PGM directory or a raw stream file, whichever ``path`` is."""
    if os.path.isdir(path):
        yield from read_pgm_dir(path, fps)
    else:
        with open(path, "rb") as fh:
            yield from read_raw_stream(fh)
