"""Raw planar 4:2:0 YUV I/O at 8-bit and 10-bit sample depths.

Files are headerless: plane order is Y, U, V per frame, 8-bit samples are
single bytes, 10-bit samples are 16-bit little-endian words with the top
six bits zero. All format metadata (dimensions, depth, frame rate) comes
from the caller, never from file content.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import ValidationError


class YuvFormatError(ValidationError):
    """Invalid plane format parameters."""


class FileSizeError(ValidationError):
    """File size is not a whole number of frames."""


class SampleRangeError(ValidationError):
    """A sample value exceeds the declared bit depth."""


@dataclass(frozen=True)
class PlaneFormat:
    """Geometry and depth of one 4:2:0 frame."""

    width: int
    height: int
    bit_depth: int

    def __post_init__(self):
        if self.bit_depth not in (8, 10):
            raise YuvFormatError(f"bit_depth must be 8 or 10, got {self.bit_depth}")
        if self.width <= 0 or self.height <= 0:
            raise YuvFormatError(f"dimensions must be positive, got {self.width}x{self.height}")
        if self.width % 2 or self.height % 2:
            # 4:2:0 chroma planes need even luma dimensions
            raise YuvFormatError(f"dimensions must be even for 4:2:0, got {self.width}x{self.height}")

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def bytes_per_sample(self) -> int:
        return 1 if self.bit_depth == 8 else 2

    @property
    def dtype(self) -> np.dtype:
        return np.dtype("u1") if self.bit_depth == 8 else np.dtype("<u2")

    @property
    def chroma_width(self) -> int:
        return self.width // 2

    @property
    def chroma_height(self) -> int:
        return self.height // 2

    @property
    def luma_samples(self) -> int:
        return self.width * self.height

    @property
    def chroma_samples(self) -> int:
        return self.chroma_width * self.chroma_height

    @property
    def frame_samples(self) -> int:
        return self.luma_samples + 2 * self.chroma_samples

    @property
    def frame_bytes(self) -> int:
        # width * height * 1.5 * bytes_per_sample, exactly
        return self.frame_samples * self.bytes_per_sample

    def with_bit_depth(self, bit_depth: int) -> "PlaneFormat":
        return PlaneFormat(self.width, self.height, bit_depth)


def _frozen(plane: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(plane)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Frame:
    """One planar 4:2:0 frame; planes are read-only 2-D arrays."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    format: PlaneFormat

    def __post_init__(self):
        fmt = self.format
        object.__setattr__(self, "y", _frozen(self.y))
        object.__setattr__(self, "u", _frozen(self.u))
        object.__setattr__(self, "v", _frozen(self.v))
        if self.y.shape != (fmt.height, fmt.width):
            raise YuvFormatError(f"luma shape {self.y.shape} != {(fmt.height, fmt.width)}")
        for name, plane in (("u", self.u), ("v", self.v)):
            if plane.shape != (fmt.chroma_height, fmt.chroma_width):
                raise YuvFormatError(
                    f"{name} plane shape {plane.shape} != {(fmt.chroma_height, fmt.chroma_width)}"
                )
        for plane in (self.y, self.u, self.v):
            if plane.size and int(plane.max()) > fmt.max_value:
                raise SampleRangeError(
                    f"sample value {int(plane.max())} exceeds {fmt.bit_depth}-bit maximum {fmt.max_value}"
                )

    def planes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.y, self.u, self.v

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.format == other.format
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
        )


@dataclass(frozen=True, eq=False)
class Sequence:
    """Ordered frames sharing one format; immutable after construction."""

    frames: tuple[Frame, ...]
    format: PlaneFormat
    frame_rate: float

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if self.frame_rate <= 0:
            raise YuvFormatError(f"frame_rate must be positive, got {self.frame_rate}")
        for i, frame in enumerate(self.frames):
            if frame.format != self.format:
                raise YuvFormatError(f"frame {i} format {frame.format} != sequence format {self.format}")

    def __len__(self) -> int:
        return len(self.frames)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sequence):
            return NotImplemented
        return (
            self.format == other.format
            and self.frame_rate == other.frame_rate
            and len(self.frames) == len(other.frames)
            and all(a == b for a, b in zip(self.frames, other.frames))
        )


def _split_frame(raw: np.ndarray, fmt: PlaneFormat) -> Frame:
    ny, nc = fmt.luma_samples, fmt.chroma_samples
    y = raw[:ny].reshape(fmt.height, fmt.width)
    u = raw[ny : ny + nc].reshape(fmt.chroma_height, fmt.chroma_width)
    v = raw[ny + nc :].reshape(fmt.chroma_height, fmt.chroma_width)
    return Frame(y, u, v, fmt)


def frame_count(path: str | os.PathLike, fmt: PlaneFormat) -> int:
    """Number of whole frames in ``path``; rejects truncated files."""
    try:
        size = Path(path).stat().st_size
    except OSError as exc:
        raise FileSizeError(f"cannot read {path}: {exc}") from exc
    if size % fmt.frame_bytes:
        raise FileSizeError(
            f"{path}: size {size} is not a multiple of the {fmt.frame_bytes}-byte frame "
            f"({fmt.width}x{fmt.height}, {fmt.bit_depth}-bit)"
        )
    return size // fmt.frame_bytes


def iter_frames(path: str | os.PathLike, fmt: PlaneFormat) -> Iterator[Frame]:
    """Yield frames one at a time; memory stays O(one frame)."""
    n_frames = frame_count(path, fmt)
    samples = fmt.frame_samples
    with open(path, "rb") as fh:
        for index in range(n_frames):
            raw = np.fromfile(fh, dtype=fmt.dtype, count=samples)
            bad = np.nonzero(raw > fmt.max_value)[0]
            if bad.size:
                offender = int(bad[0])
                raise SampleRangeError(
                    f"{path}: sample index {index * samples + offender} has value "
                    f"{int(raw[offender])} > {fmt.max_value} for declared {fmt.bit_depth}-bit depth"
                )
            yield _split_frame(raw, fmt)


def read_sequence(path: str | os.PathLike, fmt: PlaneFormat, frame_rate: float) -> Sequence:
    """Read a whole raw YUV file into a validated Sequence."""
    return Sequence(tuple(iter_frames(path, fmt)), fmt, frame_rate)


def write_frames(path: str | os.PathLike, frames: Iterable[Frame]) -> None:
    """Write frames in file order; byte-exact inverse of iter_frames."""
    with open(path, "wb") as fh:
        for frame in frames:
            for plane in frame.planes():
                fh.write(np.ascontiguousarray(plane, dtype=frame.format.dtype).tobytes())


def write_sequence(seq: Sequence, path: str | os.PathLike) -> None:
    write_frames(path, seq.frames)
