"""Frames, clips, file I/O, and center cropping.

A Frame is an immutable planar (3, H, W) float32 array with values in
[0, 1].  Two storage formats: 8-bit RGB PNG for interchange (value =
byte / 255) and a raw single-precision container (extension ``.nvsr``)
that is bit-exact, used for training data.
"""

import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    ContractError,
    DecodeError,
    InvalidClipError,
    InvalidCropError,
    UnsupportedFormatError,
)

_PNG_SIG = b"\x89PNG\r\n\x1a\n"
_MAGIC = b"NVSR"
_VERSION = 1
_RANGE_SLACK = 1e-5  # numeric dust tolerated and clipped by the constructor


class Frame:
    """One RGB image, planar (3, H, W) float32 in [0, 1], immutable."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise ContractError(f"frame must be (3, H, W), got {arr.shape}")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ContractError(f"frame dimensions must be >= 1, got {arr.shape}")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < -_RANGE_SLACK or hi > 1.0 + _RANGE_SLACK:
            raise ContractError(f"frame values outside [0, 1]: min {lo}, max {hi}")
        if lo < 0.0 or hi > 1.0:
            np.clip(arr, 0.0, 1.0, out=arr)
        arr.flags.writeable = False
        self.data = arr

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    @property
    def channels(self):
        return 3

    def __repr__(self):
        return f"Frame({self.height}x{self.width})"


class VideoClip:
    """Ordered frames of equal size; time index k/(T-1) in [0, 1]."""

    __slots__ = ("frames",)

    def __init__(self, frames):
        frames = tuple(frames)
        if not frames:
            raise InvalidClipError("a clip needs at least one frame")
        h, w = frames[0].height, frames[0].width
        for i, f in enumerate(frames):
            if (f.height, f.width) != (h, w):
                raise InvalidClipError(
                    f"frame {i} is {f.height}x{f.width}, expected {h}x{w}"
                )
        self.frames = frames

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, k):
        return self.frames[k]

    def __iter__(self):
        return iter(self.frames)

    @property
    def height(self):
        return self.frames[0].height

    @property
    def width(self):
        return self.frames[0].width

    def time_index(self, k):
        """Normalized time of frame k; a single-frame clip sits at 0."""
        t = len(self.frames)
        if not 0 <= k < t:
            raise ContractError(f"frame index {k} outside [0, {t})")
        return 0.0 if t == 1 else k / (t - 1)


def load_frame(path):
    """Read an 8-bit RGB PNG into a Frame."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 8 or raw[:8] != _PNG_SIG:
        raise DecodeError(f"{path} is not a PNG file", path=str(path), offset=0)
    if len(raw) < 26:
        raise DecodeError(f"{path} truncated before IHDR", path=str(path), offset=len(raw))
    bit_depth, color_type = raw[24], raw[25]
    if bit_depth != 8 or color_type != 2:
        raise UnsupportedFormatError(
            f"{path}: need 8-bit RGB, got bit depth {bit_depth}, color type {color_type}"
        )
    try:
        with Image.open(path) as img:
            img.load()
            arr = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise DecodeError(f"{path}: {e}", path=str(path)) from e
    return Frame(arr.transpose(2, 0, 1).astype(np.float32) / 255.0)


def save_frame(frame, path):
    """Write a Frame as 8-bit RGB PNG; value -> nearest byte."""
    path = Path(path)
    if path.suffix.lower() != ".png":
        raise UnsupportedFormatError(f"save_frame writes PNG only, got {path.suffix!r}")
    bytes_hwc = np.rint(frame.data * 255.0).clip(0, 255).astype(np.uint8).transpose(1, 2, 0)
    Image.fromarray(bytes_hwc, mode="RGB").save(path, format="PNG")


def _load_container(path):
    raw = path.read_bytes()
    if len(raw) < 20:
        raise DecodeError(f"{path} shorter than the header", path=str(path), offset=len(raw))
    if raw[:4] != _MAGIC:
        raise DecodeError(f"{path} has wrong magic {raw[:4]!r}", path=str(path), offset=0)
    version, t, h, w = struct.unpack_from("<IIII", raw, 4)
    if version != _VERSION:
        raise UnsupportedFormatError(f"{path}: container version {version} not supported")
    if t < 1 or h < 1 or w < 1:
        raise DecodeError(f"{path} header T,H,W = {t},{h},{w}", path=str(path), offset=8)
    want = t * 3 * h * w * 4
    body = raw[20:]
    if len(body) != want:
        raise DecodeError(
            f"{path} payload is {len(body)} bytes, header implies {want}",
            path=str(path),
            offset=20 + len(body),
        )
    data = np.frombuffer(body, dtype="<f4").reshape(t, 3, h, w)
    return VideoClip([Frame(data[k]) for k in range(t)])


def _save_container(clip, path):
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIII", _VERSION, len(clip), clip.height, clip.width))
        for f in clip:
            fh.write(np.ascontiguousarray(f.data, dtype="<f4").tobytes())


def load_video(path):
    """Read a clip from a ``.nvsr`` container or a directory of numbered PNGs."""
    path = Path(path)
    if path.is_file() and path.suffix == ".nvsr":
        return _load_container(path)
    if not path.is_dir():
        raise InvalidClipError(f"{path} is neither a .nvsr file nor a directory")
    entries = sorted(path.glob("*.png"))
    if not entries:
        raise InvalidClipError(f"no .png frames in {path}")
    for p in entries:
        if not p.stem.isdigit():
            raise InvalidClipError(f"frame name {p.name!r} is not zero-padded numeric")
    return VideoClip([load_frame(p) for p in entries])


def save_video(clip, path):
    """Write a clip to a ``.nvsr`` container or a directory of numbered PNGs."""
    path = Path(path)
    if path.suffix == ".nvsr":
        path.parent.mkdir(parents=True, exist_ok=True)
        _save_container(clip, path)
        return
    path.mkdir(parents=True, exist_ok=True)
    for k, f in enumerate(clip):
        save_frame(f, path / f"{k:06d}.png")


def center_crop(frame, out_h, out_w):
    """Centered window; offsets floor((H - H')/2), floor((W - W')/2)."""
    h, w = frame.height, frame.width
    if out_h > h or out_w > w:
        raise InvalidCropError(f"crop {out_h}x{out_w} exceeds frame {h}x{w}")
    if out_h < 1 or out_w < 1:
        raise InvalidCropError(f"crop dimensions must be >= 1, got {out_h}x{out_w}")
    oy = (h - out_h) // 2
    ox = (w - out_w) // 2
    return Frame(frame.data[:, oy : oy + out_h, ox : ox + out_w])
