"""Raw planar 4:2:0 reader/writer behaviour."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrbench import yuv
from hdrbench.yuv import (
    FileSizeError,
    Frame,
    PlaneFormat,
    SampleRangeError,
    Sequence,
    YuvFormatError,
)
from tests.conftest import make_sequence


class TestPlaneFormat:
    def test_properties_10bit(self):
        fmt = PlaneFormat(64, 48, 10)
        assert fmt.max_value == 1023
        assert fmt.bytes_per_sample == 2
        assert fmt.dtype == np.dtype("<u2")
        assert fmt.chroma_width == 32 and fmt.chroma_height == 24
        assert fmt.frame_samples == 64 * 48 * 3 // 2
        assert fmt.frame_bytes == fmt.frame_samples * 2

    def test_properties_8bit(self):
        fmt = PlaneFormat(64, 48, 8)
        assert fmt.max_value == 255
        assert fmt.bytes_per_sample == 1
        assert fmt.dtype == np.dtype(np.uint8)
        assert fmt.frame_bytes == 64 * 48 * 3 // 2

    @pytest.mark.parametrize("width,height", [(63, 64), (64, 63), (0, 64), (64, 0)])
    def test_rejects_bad_dimensions(self, width, height):
        with pytest.raises(YuvFormatError):
            PlaneFormat(width, height, 10)

    @pytest.mark.parametrize("depth", [7, 9, 12, 16])
    def test_rejects_unsupported_depth(self, depth):
        with pytest.raises(YuvFormatError):
            PlaneFormat(64, 64, depth)

    def test_with_bit_depth(self):
        fmt = PlaneFormat(64, 64, 10)
        assert fmt.with_bit_depth(8) == PlaneFormat(64, 64, 8)
        assert fmt.with_bit_depth(10) is not None


class TestFrame:
    def test_planes_are_read_only(self, fmt10):
        frame = make_sequence(0, fmt10, frames=1).frames[0]
        with pytest.raises(ValueError):
            frame.y[0, 0] = 1

    def test_rejects_wrong_luma_shape(self, fmt10):
        zeros = np.zeros((32, 32), dtype=np.uint16)
        with pytest.raises(YuvFormatError):
            Frame(zeros, zeros, zeros, fmt10)

    def test_rejects_out_of_range_samples(self, fmt10):
        y = np.full((64, 64), 1024, dtype=np.uint16)
        c = np.zeros((32, 32), dtype=np.uint16)
        with pytest.raises(SampleRangeError):
            Frame(y, c, c, fmt10)

    def test_equality_is_by_content(self, fmt10):
        a = make_sequence(3, fmt10, frames=1).frames[0]
        b = Frame(a.y.copy(), a.u.copy(), a.v.copy(), fmt10)
        assert a == b
        c = Frame(a.y.copy() // 2, a.u.copy(), a.v.copy(), fmt10)
        assert a != c


class TestFileRoundTrip:
    @pytest.mark.parametrize("depth", [8, 10])
    def test_write_read_round_trip(self, tmp_path, depth):
        fmt = PlaneFormat(32, 16, depth)
        seq = make_sequence(7, fmt, frames=4)
        path = tmp_path / "clip.yuv"
        yuv.write_sequence(seq, path)
        assert path.stat().st_size == 4 * fmt.frame_bytes
        back = yuv.read_sequence(path, fmt, seq.frame_rate)
        assert back == seq

    def test_ten_bit_samples_are_little_endian_words(self, tmp_path):
        fmt = PlaneFormat(2, 2, 10)
        y = np.array([[1, 2], [3, 1023]], dtype=np.uint16)
        c = np.array([[513]], dtype=np.uint16)
        path = tmp_path / "one.yuv"
        yuv.write_frames(path, [Frame(y, c, c, fmt)])
        raw = path.read_bytes()
        assert raw[:8] == b"\x01\x00\x02\x00\x03\x00\xff\x03"
        assert raw[8:10] == b"\x01\x02"  # 513 = 0x0201 little endian

    def test_frame_count(self, tmp_path, fmt10):
        seq = make_sequence(5, fmt10, frames=3)
        path = tmp_path / "clip.yuv"
        yuv.write_sequence(seq, path)
        assert yuv.frame_count(path, fmt10) == 3

    def test_truncated_file_raises(self, tmp_path, fmt10):
        seq = make_sequence(5, fmt10, frames=2)
        path = tmp_path / "clip.yuv"
        yuv.write_sequence(seq, path)
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(FileSizeError):
            yuv.frame_count(path, fmt10)

    def test_out_of_range_file_sample_reports_index(self, tmp_path):
        fmt = PlaneFormat(2, 2, 10)
        words = np.zeros(2 * fmt.frame_samples, dtype="<u2")
        words[fmt.frame_samples + 3] = 1024  # first word of frame 2's chroma
        path = tmp_path / "bad.yuv"
        path.write_bytes(words.tobytes())
        with pytest.raises(SampleRangeError) as err:
            list(yuv.iter_frames(path, fmt))
        assert str(fmt.frame_samples + 3) in str(err.value)

    def test_iter_frames_matches_bulk_read(self, tmp_path, fmt10):
        seq = make_sequence(9, fmt10, frames=5)
        path = tmp_path / "clip.yuv"
        yuv.write_sequence(seq, path)
        streamed = tuple(yuv.iter_frames(path, fmt10))
        assert streamed == seq.frames


class TestSequence:
    def test_len_and_equality(self, fmt10):
        a = make_sequence(1, fmt10, frames=2)
        b = make_sequence(1, fmt10, frames=2)
        assert len(a) == 2
        assert a == b
        assert a != make_sequence(2, fmt10, frames=2)

    def test_rejects_nonpositive_frame_rate(self, fmt10):
        frames = make_sequence(1, fmt10, frames=1).frames
        with pytest.raises(YuvFormatError):
            Sequence(frames, fmt10, 0.0)

    def test_rejects_mixed_formats(self, fmt10):
        frame8 = make_sequence(1, PlaneFormat(64, 64, 8), frames=1).frames[0]
        with pytest.raises(YuvFormatError):
            Sequence((frame8,), fmt10, 50.0)


@settings(max_examples=25, deadline=None)
@given(
    depth=st.sampled_from([8, 10]),
    frames=st.integers(min_value=1, max_value=3),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_round_trip_is_byte_exact(tmp_path_factory, depth, frames, seed):
    fmt = PlaneFormat(8, 4, depth)
    rng = np.random.default_rng(seed)
    seq = Sequence(
        tuple(
            Frame(
                rng.integers(0, fmt.max_value + 1, (4, 8)).astype(fmt.dtype),
                rng.integers(0, fmt.max_value + 1, (2, 4)).astype(fmt.dtype),
                rng.integers(0, fmt.max_value + 1, (2, 4)).astype(fmt.dtype),
                fmt,
            )
            for _ in range(frames)
        ),
        fmt,
        50.0,
    )
    path = tmp_path_factory.mktemp("rt") / "clip.yuv"
    yuv.write_sequence(seq, path)
    assert yuv.read_sequence(path, fmt, 50.0) == seq
