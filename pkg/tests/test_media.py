"""Frame/clip containers, PNG and raw-container I/O, center crop."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from nvsr.errors import (
    ContractError,
    DecodeError,
    InvalidClipError,
    InvalidCropError,
    UnsupportedFormatError,
)
from nvsr.media import (
    Frame,
    VideoClip,
    center_crop,
    load_frame,
    load_video,
    save_frame,
    save_video,
)


def rand_frame(rng, h=6, w=8):
    return Frame(rng.random((3, h, w), dtype=np.float32))


class TestFrame:
    def test_shape_and_range_validated(self):
        with pytest.raises(ContractError):
            Frame(np.zeros((1, 4, 4), np.float32))
        with pytest.raises(ContractError):
            Frame(np.full((3, 4, 4), 1.5, np.float32))
        with pytest.raises(ContractError):
            Frame(np.full((3, 4, 4), -0.5, np.float32))

    def test_numeric_dust_clipped(self):
        f = Frame(np.full((3, 2, 2), 1.0 + 1e-7, np.float32))
        assert float(f.data.max()) == 1.0

    def test_immutable(self):
        f = rand_frame(np.random.default_rng(0))
        with pytest.raises(ValueError):
            f.data[0, 0, 0] = 0.5

    def test_does_not_alias_source_array(self):
        src = np.zeros((3, 2, 2), np.float32)
        f = Frame(src)
        src[0, 0, 0] = 1.0
        assert f.data[0, 0, 0] == 0.0


class TestVideoClip:
    def test_time_indices(self):
        rng = np.random.default_rng(1)
        clip = VideoClip([rand_frame(rng) for _ in range(3)])
        assert [clip.time_index(k) for k in range(3)] == [0.0, 0.5, 1.0]

    def test_single_frame_time_is_zero(self):
        clip = VideoClip([rand_frame(np.random.default_rng(2))])
        assert clip.time_index(0) == 0.0

    def test_time_index_out_of_range(self):
        clip = VideoClip([rand_frame(np.random.default_rng(3))])
        with pytest.raises(ContractError):
            clip.time_index(1)

    def test_empty_rejected(self):
        with pytest.raises(InvalidClipError):
            VideoClip([])

    def test_mixed_dimensions_rejected(self):
        rng = np.random.default_rng(4)
        with pytest.raises(InvalidClipError):
            VideoClip([rand_frame(rng, 4, 4), rand_frame(rng, 4, 6)])


class TestPngRoundtrip:
    def test_known_bytes_normalize(self, tmp_path):
        from PIL import Image

        px = np.array(
            [[[0, 128, 255], [64, 32, 16]], [[255, 255, 255], [0, 0, 0]]], dtype=np.uint8
        )
        p = tmp_path / "t.png"
        Image.fromarray(px, mode="RGB").save(p)
        f = load_frame(p)
        assert_allclose(f.data, px.transpose(2, 0, 1).astype(np.float32) / 255.0)

    def test_save_load_save_bit_stable(self, tmp_path):
        rng = np.random.default_rng(5)
        f = rand_frame(rng)
        p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
        save_frame(f, p1)
        save_frame(load_frame(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_quantization_bound(self, tmp_path):
        rng = np.random.default_rng(6)
        f = rand_frame(rng, 16, 16)
        p = tmp_path / "q.png"
        save_frame(f, p)
        back = load_frame(p)
        assert float(np.abs(back.data - f.data).max()) <= 1.0 / 510.0 + 1e-7

    def test_not_a_png_decode_error_offset_zero(self, tmp_path):
        p = tmp_path / "bad.png"
        p.write_bytes(b"hello world, definitely not an image")
        with pytest.raises(DecodeError) as ei:
            load_frame(p)
        assert ei.value.offset == 0

    def test_sixteen_bit_png_unsupported(self, tmp_path):
        from PIL import Image

        arr = (np.random.default_rng(7).random((4, 4)) * 65535).astype(np.uint16)
        p = tmp_path / "deep.png"
        Image.fromarray(arr).save(p)
        with pytest.raises(UnsupportedFormatError):
            load_frame(p)

    def test_grayscale_png_unsupported(self, tmp_path):
        from PIL import Image

        arr = np.zeros((4, 4), np.uint8)
        p = tmp_path / "gray.png"
        Image.fromarray(arr, mode="L").save(p)
        with pytest.raises(UnsupportedFormatError):
            load_frame(p)

    def test_non_png_extension_rejected_on_save(self, tmp_path):
        f = rand_frame(np.random.default_rng(8))
        with pytest.raises(UnsupportedFormatError):
            save_frame(f, tmp_path / "x.jpg")


class TestContainer:
    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(9)
        clip = VideoClip([rand_frame(rng, 5, 7) for _ in range(4)])
        p = tmp_path / "c.nvsr"
        save_video(clip, p)
        back = load_video(p)
        assert len(back) == 4
        for a, b in zip(clip, back):
            assert a.data.tobytes() == b.data.tobytes()

    def test_header_fields_parse_back(self, tmp_path):
        rng = np.random.default_rng(10)
        clip = VideoClip([rand_frame(rng, 6, 4) for _ in range(8)])
        p = tmp_path / "h.nvsr"
        save_video(clip, p)
        raw = p.read_bytes()
        assert raw[:4] == b"NVSR"
        version, t, h, w = struct.unpack_from("<IIII", raw, 4)
        assert (version, t, h, w) == (1, 8, 6, 4)
        back = load_video(p)
        assert (len(back), back.height, back.width) == (8, 6, 4)

    def test_wrong_magic_offset_zero(self, tmp_path):
        p = tmp_path / "bad.nvsr"
        p.write_bytes(b"XXXX" + b"\x00" * 32)
        with pytest.raises(DecodeError) as ei:
            load_video(p)
        assert ei.value.offset == 0

    def test_truncated_payload_reports_offset(self, tmp_path):
        rng = np.random.default_rng(11)
        clip = VideoClip([rand_frame(rng, 4, 4)])
        p = tmp_path / "t.nvsr"
        save_video(clip, p)
        raw = p.read_bytes()
        p.write_bytes(raw[:-8])
        with pytest.raises(DecodeError) as ei:
            load_video(p)
        assert ei.value.offset == len(raw) - 8

    def test_unsupported_version(self, tmp_path):
        p = tmp_path / "v.nvsr"
        p.write_bytes(b"NVSR" + struct.pack("<IIII", 99, 1, 1, 1) + b"\x00" * 12)
        with pytest.raises(UnsupportedFormatError):
            load_video(p)


class TestVideoDirectory:
    def test_ordering_and_time_indices(self, tmp_path):
        rng = np.random.default_rng(12)
        frames = [rand_frame(rng) for _ in range(3)]
        for k, f in enumerate(frames):
            save_frame(f, tmp_path / f"{k:03d}.png")
        clip = load_video(tmp_path)
        assert len(clip) == 3
        assert [clip.time_index(k) for k in range(3)] == [0.0, 0.5, 1.0]

    def test_save_video_roundtrip_quantized(self, tmp_path):
        rng = np.random.default_rng(13)
        clip = VideoClip([rand_frame(rng) for _ in range(2)])
        save_video(clip, tmp_path / "v")
        back = load_video(tmp_path / "v")
        for a, b in zip(clip, back):
            assert float(np.abs(a.data - b.data).max()) <= 1.0 / 510.0 + 1e-7

    def test_non_numeric_names_rejected(self, tmp_path):
        save_frame(rand_frame(np.random.default_rng(14)), tmp_path / "frame_a.png")
        with pytest.raises(InvalidClipError):
            load_video(tmp_path)

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(InvalidClipError):
            load_video(tmp_path)

    def test_mixed_sizes_rejected(self, tmp_path):
        rng = np.random.default_rng(15)
        save_frame(rand_frame(rng, 4, 4), tmp_path / "000.png")
        save_frame(rand_frame(rng, 4, 6), tmp_path / "001.png")
        with pytest.raises(InvalidClipError):
            load_video(tmp_path)


class TestCenterCrop:
    def test_identity_crop(self):
        f = rand_frame(np.random.default_rng(16), 5, 5)
        g = center_crop(f, 5, 5)
        assert (g.data == f.data).all()

    def test_odd_to_odd_keeps_middle(self):
        vals = np.arange(75, dtype=np.float32).reshape(3, 5, 5) / 74.0
        g = center_crop(Frame(vals), 3, 3)
        assert_allclose(g.data, vals[:, 1:4, 1:4])

    def test_even_to_odd_floor_tiebreak(self):
        vals = np.arange(108, dtype=np.float32).reshape(3, 6, 6) / 107.0
        g = center_crop(Frame(vals), 3, 3)
        assert_allclose(g.data, vals[:, 1:4, 1:4])

    def test_oversize_rejected(self):
        f = rand_frame(np.random.default_rng(17), 4, 4)
        with pytest.raises(InvalidCropError):
            center_crop(f, 5, 4)

    @given(
        h=st.integers(1, 10),
        w=st.integers(1, 10),
        dh=st.integers(0, 9),
        dw=st.integers(0, 9),
    )
    @settings(max_examples=50, deadline=None)
    def test_crop_is_contiguous_window(self, h, w, dh, dw):
        oh, ow = max(1, h - dh), max(1, w - dw)
        rng = np.random.default_rng(h * 1000 + w * 100 + dh * 10 + dw)
        f = rand_frame(rng, h, w)
        g = center_crop(f, oh, ow)
        oy, ox = (h - oh) // 2, (w - ow) // 2
        assert (g.data == f.data[:, oy : oy + oh, ox : ox + ow]).all()
