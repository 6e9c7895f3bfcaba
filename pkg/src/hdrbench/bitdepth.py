"""Linear 10-bit/8-bit sample depth conversion and its quantization noise.

The forward map rescales the integer range [0, 1023] onto [0, 255] with
round-half-up; the inverse appends two zero bits (multiply by 4). The two
are deliberately asymmetric: expand(tonemap(x)) == x does not hold, only
|x - expand(tonemap(x))| <= 5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .yuv import Frame, Sequence


class BitDepthError(ValidationError):
    """Sequence bit depth does not match the requested conversion."""


def tonemap_plane(plane: np.ndarray) -> np.ndarray:
    """Map 10-bit samples to 8-bit: round-half-up of x * 255 / 1023.

    Integer arithmetic keeps the result bit-exact across platforms:
    (x * 510 + 1023) // 2046. Exact halves cannot occur, so the rounding
    mode never actually breaks ties, but it is pinned anyway.
    """
    x = plane.astype(np.uint32)
    return ((x * 510 + 1023) // 2046).astype(np.uint8)


def expand_plane(plane: np.ndarray) -> np.ndarray:
    """Map 8-bit samples to 10-bit by appending two zero bits (x * 4)."""
    return plane.astype(np.uint16) << 2


def _convert(seq: Sequence, want_depth: int, out_depth: int, op) -> Sequence:
    if seq.format.bit_depth != want_depth:
        raise BitDepthError(
            f"expected a {want_depth}-bit sequence, got {seq.format.bit_depth}-bit"
        )
    out_fmt = seq.format.with_bit_depth(out_depth)
    frames = tuple(
        Frame(op(f.y), op(f.u), op(f.v), out_fmt) for f in seq.frames
    )
    return Sequence(frames, out_fmt, seq.frame_rate)


def tonemap_10_to_8(seq: Sequence) -> Sequence:
    """Tone-map a 10-bit sequence down to 8-bit (same mapping on Y, U, V)."""
    return _convert(seq, 10, 8, tonemap_plane)


def expand_8_to_10(seq: Sequence) -> Sequence:
    """Expand an 8-bit sequence to 10-bit; inverse of integer division by 4."""
    return _convert(seq, 8, 10, expand_plane)


@dataclass(frozen=True)
class NoiseReport:
    """Round-trip error statistics over all 1024 10-bit codes.

    mse_ideal_inverse measures against the real-valued rescale by 1023/255;
    mse_shift_inverse against the << 2 expansion actually used. The shift
    inverse adds a deterministic bias, so it is never the smaller of the two.
    """

    mse_ideal_inverse: float
    mse_shift_inverse: float
    max_abs_error_shift: int

    def __post_init__(self):
        if min(self.mse_ideal_inverse, self.mse_shift_inverse, self.max_abs_error_shift) < 0:
            raise ValidationError("noise statistics must be non-negative")
        if self.mse_shift_inverse < self.mse_ideal_inverse:
            raise ValidationError("shift-inverse MSE cannot beat the ideal inverse")


def quantization_noise_report() -> NoiseReport:
    """Sweep all 1024 input codes (uniform weighting) and report the noise."""
    codes = np.arange(1024, dtype=np.int64)
    mapped = (codes * 510 + 1023) // 2046
    err_ideal = codes - (1023.0 / 255.0) * mapped
    err_shift = codes - 4 * mapped
    return NoiseReport(
        mse_ideal_inverse=float(np.mean(err_ideal**2)),
        mse_shift_inverse=float(np.mean(err_shift.astype(np.float64) ** 2)),
        max_abs_error_shift=int(np.max(np.abs(err_shift))),
    )
