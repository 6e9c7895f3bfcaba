"""Full-reference quality between a 10-bit source and a 10-bit output.

PSNR is computed per color component and combined with luma-weighted
averaging: (6 * Y + U + V) / 8. Identical planes yield an infinite PSNR,
represented by the float('inf') sentinel; it propagates through averaging
and the weighted combination, and curve fitting rejects it downstream.

An external perceptual metric (e.g. HDR-VDP) is supported only through a
command adapter: a template with {REF} and {TEST} placeholders whose
process prints a single decimal score in [0, 10] on stdout.
"""

from __future__ import annotations

import math
import shlex
import subprocess
from dataclasses import dataclass

import numpy as np

from .errors import ExecutionError, ValidationError
from .yuv import Sequence

INFINITE_PSNR = float("inf")

SCORE_MIN = 0.0
SCORE_MAX = 10.0


class PlaneMismatchError(ValidationError):
    """Compared planes or sequences disagree in shape, depth, or length."""


class ExternalMetricError(ExecutionError):
    """External metric process failed or produced an unusable score."""


@dataclass(frozen=True)
class QualityRecord:
    psnr_y: float
    psnr_u: float
    psnr_v: float
    psnr_yuv: float
    external_score: float | None = None

    def __post_init__(self):
        if self.external_score is not None and not (
            SCORE_MIN <= self.external_score <= SCORE_MAX
        ):
            raise ValidationError(
                f"external score {self.external_score} outside [{SCORE_MIN}, {SCORE_MAX}]"
            )


def mse_plane(ref: np.ndarray, test: np.ndarray) -> float:
    """Mean squared sample difference between two equally shaped planes."""
    if ref.shape != test.shape:
        raise PlaneMismatchError(f"plane shapes differ: {ref.shape} vs {test.shape}")
    if ref.dtype != test.dtype:
        raise PlaneMismatchError(f"plane dtypes differ: {ref.dtype} vs {test.dtype}")
    diff = ref.astype(np.float64) - test.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr_plane(ref: np.ndarray, test: np.ndarray, bit_depth: int) -> float:
    """10 * log10(peak^2 / MSE) with peak = 2^bit_depth - 1; inf when MSE is 0."""
    mse = mse_plane(ref, test)
    if mse == 0.0:
        return INFINITE_PSNR
    peak = (1 << bit_depth) - 1
    return 10.0 * math.log10(peak * peak / mse)


def psnr_yuv(y: float, u: float, v: float) -> float:
    """Combine per-plane PSNRs as (6*Y + U + V) / 8; infinity propagates."""
    if math.isinf(y) or math.isinf(u) or math.isinf(v):
        return INFINITE_PSNR
    return (6.0 * y + u + v) / 8.0


def sequence_quality(ref: Sequence, test: Sequence) -> QualityRecord:
    """Per-frame plane PSNRs, arithmetic mean across frames, then combined.

    Both sequences must be 10-bit: 8-bit decoder output is expanded back to
    10-bit before the comparison so all variants are scored in one domain.
    """
    for name, seq in (("ref", ref), ("test", test)):
        if seq.format.bit_depth != 10:
            raise PlaneMismatchError(f"{name} sequence is {seq.format.bit_depth}-bit, expected 10-bit")
    if ref.format != test.format:
        raise PlaneMismatchError(f"sequence formats differ: {ref.format} vs {test.format}")
    if len(ref) != len(test):
        raise PlaneMismatchError(f"frame counts differ: {len(ref)} vs {len(test)}")
    if not ref.frames:
        raise PlaneMismatchError("cannot score an empty sequence")

    depth = ref.format.bit_depth
    per_plane = {"y": [], "u": [], "v": []}
    for rf, tf in zip(ref.frames, test.frames):
        per_plane["y"].append(psnr_plane(rf.y, tf.y, depth))
        per_plane["u"].append(psnr_plane(rf.u, tf.u, depth))
        per_plane["v"].append(psnr_plane(rf.v, tf.v, depth))
    return aggregate_frame_psnrs(per_plane["y"], per_plane["u"], per_plane["v"])


def aggregate_frame_psnrs(
    y_values: list[float], u_values: list[float], v_values: list[float]
) -> QualityRecord:
    """Arithmetic mean of per-frame plane PSNRs, then the weighted combination.

    A single lossless frame makes the whole plane mean infinite, which then
    propagates into the combined figure.
    """
    if not y_values or len(y_values) != len(u_values) or len(y_values) != len(v_values):
        raise PlaneMismatchError("need equally many per-frame PSNRs for Y, U and V")

    def mean(values: list[float]) -> float:
        return INFINITE_PSNR if any(math.isinf(v) for v in values) else sum(values) / len(values)

    py, pu, pv = mean(y_values), mean(u_values), mean(v_values)
    return QualityRecord(py, pu, pv, psnr_yuv(py, pu, pv))


def external_metric(ref_path, test_path, command_template: str, timeout: float | None = None) -> float:
    """Run an external quality metric and parse its score from stdout.

    The template must contain {REF} and {TEST}; any further arguments (viewing
    parameters and the like) are the invoked tool's business and pass through
    verbatim. Placeholders are substituted after shell-style tokenization, so
    paths with spaces survive.
    """
    if "{REF}" not in command_template or "{TEST}" not in command_template:
        raise ValidationError("metric command template must contain {REF} and {TEST}")
    argv = [
        token.replace("{REF}", str(ref_path)).replace("{TEST}", str(test_path))
        for token in shlex.split(command_template)
    ]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except OSError as exc:
        raise ExternalMetricError(f"metric command failed to start: {exc}") from exc
    except subprocess.TimeoutExpired as exc:
        raise ExternalMetricError(f"metric command timed out after {timeout}s") from exc
    if proc.returncode != 0:
        raise ExternalMetricError(
            f"metric command exited {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    # Tools tend to print banners before the figure; the score is the last
    # non-empty stdout line.
    lines = [line.strip() for line in proc.stdout.splitlines() if line.strip()]
    if not lines:
        raise ExternalMetricError("metric command printed nothing on stdout")
    try:
        score = float(lines[-1])
    except ValueError:
        raise ExternalMetricError(
            f"metric output does not end in a decimal score: {lines[-1]!r}"
        ) from None
    if not math.isfinite(score) or not (SCORE_MIN <= score <= SCORE_MAX):
        raise ExternalMetricError(f"metric score {score} outside [{SCORE_MIN}, {SCORE_MAX}]")
    return score
