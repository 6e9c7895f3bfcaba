"""Shared fixtures: synthetic sequences and mock-codec command templates."""

import sys

import numpy as np
import pytest

from hdrbench.yuv import Frame, PlaneFormat, Sequence

MOCK_ENCODE = (
    f"{sys.executable} -m hdrbench.mockcodec encode --input {{INPUT}} "
    "--output {OUTPUT} --width {WIDTH} --height {HEIGHT} "
    "--bit-depth {BITDEPTH} --qp {QP}"
)
MOCK_DECODE = (
    f"{sys.executable} -m hdrbench.mockcodec decode --input {{INPUT}} "
    "--output {OUTPUT} --output-depth {BITDEPTH}"
)


def make_frame(rng: np.random.Generator, fmt: PlaneFormat) -> Frame:
    """One frame of smooth blocks plus mild noise, clipped to the depth."""

    def plane(height, width):
        base = rng.integers(0, fmt.max_value + 1, size=(4, 4)).astype(np.float64)
        big = np.kron(base, np.ones((height // 4, width // 4)))
        noisy = big + rng.normal(0.0, fmt.max_value / 120.0, size=(height, width))
        return np.clip(noisy, 0, fmt.max_value).astype(fmt.dtype)

    return Frame(
        plane(fmt.height, fmt.width),
        plane(fmt.chroma_height, fmt.chroma_width),
        plane(fmt.chroma_height, fmt.chroma_width),
        fmt,
    )


def make_sequence(
    seed: int, fmt: PlaneFormat, frames: int = 3, frame_rate: float = 50.0
) -> Sequence:
    rng = np.random.default_rng(seed)
    return Sequence(
        tuple(make_frame(rng, fmt) for _ in range(frames)), fmt, frame_rate
    )


@pytest.fixture
def fmt10() -> PlaneFormat:
    return PlaneFormat(64, 64, 10)


@pytest.fixture
def fmt8() -> PlaneFormat:
    return PlaneFormat(64, 64, 8)


@pytest.fixture
def seq10(fmt10) -> Sequence:
    return make_sequence(11, fmt10)


@pytest.fixture
def rapl_tree(tmp_path):
    """Minimal powercap sysfs layout with one package domain."""
    domain = tmp_path / "powercap" / "intel-rapl:0"
    domain.mkdir(parents=True)
    (domain / "energy_uj").write_text("500000\n")
    (domain / "max_energy_range_uj").write_text("1000000\n")
    return tmp_path / "powercap"
