"""Bit-depth benchmarking toolkit for HDR video encoders.

Measures rate, quality, CPU time and package energy of encoder variants
that trade internal bit depth for speed, and compares them with
Bjøntegaard-style curve deltas.
"""

from .bitdepth import expand_8_to_10, quantization_noise_report, tonemap_10_to_8
from .curves import Curve, OperatingPoint, bd_delta, compare, find_intersections
from .errors import ExecutionError, ValidationError
from .metrics import psnr_plane, psnr_yuv, sequence_quality
from .yuv import Frame, PlaneFormat, Sequence, read_sequence, write_sequence

__version__ = "0.1.0"

__all__ = [
    "Curve",
    "ExecutionError",
    "Frame",
    "OperatingPoint",
    "PlaneFormat",
    "Sequence",
    "ValidationError",
    "bd_delta",
    "compare",
    "expand_8_to_10",
    "find_intersections",
    "psnr_plane",
    "psnr_yuv",
    "quantization_noise_report",
    "read_sequence",
    "sequence_quality",
    "tonemap_10_to_8",
    "write_sequence",
    "__version__",
]
