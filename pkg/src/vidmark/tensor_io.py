"""Video and watermark I/O plus the shared numeric tensor model.

Videos are dense float64 arrays of shape (F, H, W, C) with samples in
[0, 1]; watermarks are (H, W, C).  Integer pixel values v map to v/255.
Supported containers: directories of numerically ordered PNG frames
(``frame_000001.png`` style) and 8-bit y4m streams (4:4:4 and 4:2:0).
"""

import io
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


class TensorIOError(ValueError):
    """Raised for malformed inputs or unsupported pixel formats."""


@dataclass(frozen=True)
class FrameSequence:
    """An F x H x W x C volume of samples in [0, 1].

    H and W must be even (single-level DWT requirement); the 3D DWT
    additionally needs even F, checked where it is applied.
    """

    samples: np.ndarray

    def __post_init__(self):
        s = self.samples
        if s.ndim != 4:
            raise TensorIOError(f"expected (F,H,W,C) array, got shape {s.shape}")
        f, h, w, c = s.shape
        if f < 1 or h < 2 or w < 2:
            raise TensorIOError(f"degenerate dimensions {s.shape}")
        if h % 2 or w % 2:
            raise TensorIOError(f"H and W must be even, got {h}x{w}")
        if c not in (1, 3):
            raise TensorIOError(f"channels must be 1 or 3, got {c}")
        if s.min() < 0.0 or s.max() > 1.0:
            raise TensorIOError("samples outside [0, 1]")

    @property
    def frames(self):
        return self.samples.shape[0]

    @property
    def height(self):
        return self.samples.shape[1]

    @property
    def width(self):
        return self.samples.shape[2]

    @property
    def channels(self):
        return self.samples.shape[3]


@dataclass(frozen=True)
class WatermarkImage:
    """An H x W x C graphical watermark with samples in [0, 1]."""

    samples: np.ndarray

    def __post_init__(self):
        s = self.samples
        if s.ndim != 3:
            raise TensorIOError(f"expected (H,W,C) array, got shape {s.shape}")
        if s.shape[2] not in (1, 3):
            raise TensorIOError(f"channels must be 1 or 3, got {s.shape[2]}")
        if s.min() < 0.0 or s.max() > 1.0:
            raise TensorIOError("samples outside [0, 1]")

    @property
    def height(self):
        return self.samples.shape[0]

    @property
    def width(self):
        return self.samples.shape[1]

    @property
    def channels(self):
        return self.samples.shape[2]


def _to_unit(arr8):
    return arr8.astype(np.float64) / 255.0

def _to_uint8(arr):
    return np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)


def _decode_image(path):
    img = Image.open(path)
    if img.mode in ("P", "RGBA"):
        img = img.convert("RGB")
    elif img.mode == "LA":
        img = img.convert("L")
    if img.mode == "L":
        arr = np.asarray(img, dtype=np.uint8)[:, :, None]
    elif img.mode == "RGB":
        arr = np.asarray(img, dtype=np.uint8)
    else:
        raise TensorIOError(f"unsupported pixel format {img.mode!r} in {path}")
    return arr


_FRAME_INDEX_RE = re.compile(r"(\d+)")


def _ordered_frame_paths(directory):
    paths = sorted(Path(directory).glob("*.png"))
    if not paths:
        raise TensorIOError(f"no PNG frames found in {directory}")

    def numeric_key(p):
        m = _FRAME_INDEX_RE.findall(p.stem)
        return (int(m[-1]) if m else 0, p.name)

    return sorted(paths, key=numeric_key)


def load_frames(path):
    """Load a video from a PNG frame directory or a y4m file.

    Frames are ordered by the numeric index in their filename (stream
    order for y4m); all frames must share dimensions and pixel format.
    """
    path = Path(path)
    if path.is_file() and path.suffix.lower() == ".y4m":
        with open(path, "rb") as fh:
            return read_y4m(fh)
    if not path.is_dir():
        raise TensorIOError(f"missing path: {path}")
    arrs = [_decode_image(p) for p in _ordered_frame_paths(path)]
    shapes = {a.shape for a in arrs}
    if len(shapes) != 1:
        raise TensorIOError(f"inconsistent frame dimensions: {sorted(shapes)}")
    return FrameSequence(samples=_to_unit(np.stack(arrs, axis=0)))


def save_frames(seq, path, colorspace="444"):
    """Write a video to a PNG frame directory or a y4m file.

    The round trip through :func:`load_frames` reproduces samples within
    one 8-bit quantization step (1/255).  PNG directory writes are
    atomic per frame (temp file + rename).
    """
    path = Path(path)
    if path.suffix.lower() == ".y4m":
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as fh:
            write_y4m(seq, fh, colorspace=colorspace)
        os.replace(tmp, path)
        return
    path.mkdir(parents=True, exist_ok=True)
    data = _to_uint8(seq.samples)
    for i in range(seq.frames):
        frame = data[i, :, :, 0] if seq.channels == 1 else data[i]
        img = Image.fromarray(frame, mode="L" if seq.channels == 1 else "RGB")
        target = path / f"frame_{i + 1:06d}.png"
        fd, tmp = tempfile.mkstemp(suffix=".png", dir=path)
        try:
            with os.fdopen(fd, "wb") as fh:
                img.save(fh, format="PNG")
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def load_watermark(path, patch_size=16):
    """Load a watermark image whose dims must divide by the patch size."""
    path = Path(path)
    if not path.is_file():
        raise TensorIOError(f"missing path: {path}")
    arr = _decode_image(path)
    h, w = arr.shape[0], arr.shape[1]
    if h % patch_size or w % patch_size:
        raise TensorIOError(
            f"dimensions not divisible by patch size: {h}x{w} vs {patch_size}"
        )
    return WatermarkImage(samples=_to_unit(arr))


def save_watermark(wm, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = _to_uint8(wm.samples)
    frame = data[:, :, 0] if wm.channels == 1 else data
    img = Image.fromarray(frame, mode="L" if wm.channels == 1 else "RGB")
    fd, tmp = tempfile.mkstemp(suffix=".png", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            img.save(fh, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- y4m (8-bit 4:4:4 / 4:2:0 / mono), full-range BT.601 conversion ---

_Y4M_MAGIC = b"YUV4MPEG2"

# full-range BT.601 RGB <-> YCbCr
_RGB2YCBCR = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCBCR2RGB = np.linalg.inv(_RGB2YCBCR)


def _rgb_to_ycbcr(rgb):
    ycc = rgb @ _RGB2YCBCR.T
    ycc[..., 1:] += 0.5
    return ycc


def _ycbcr_to_rgb(ycc):
    ycc = ycc.copy()
    ycc[..., 1:] -= 0.5
    return ycc @ _YCBCR2RGB.T


def read_y4m(stream):
    """Read an 8-bit y4m stream (C444, C420*, or Cmono) into a FrameSequence.

    4:2:0 chroma is upsampled by pixel replication; color converts from
    full-range BT.601 YCbCr to RGB.
    """
    header = bytearray()
    while True:
        ch = stream.read(1)
        if not ch:
            raise TensorIOError("truncated y4m header")
        if ch == b"\n":
            break
        header.extend(ch)
    fields = bytes(header).split(b" ")
    if fields[0] != _Y4M_MAGIC:
        raise TensorIOError("not a y4m stream")
    width = height = None
    colorspace = "420"
    for f in fields[1:]:
        if f.startswith(b"W"):
            width = int(f[1:])
        elif f.startswith(b"H"):
            height = int(f[1:])
        elif f.startswith(b"C"):
            colorspace = f[1:].decode()
    if width is None or height is None:
        raise TensorIOError("y4m header missing dimensions")
    if colorspace.startswith("420"):
        subsampled = True
        mono = False
    elif colorspace == "444":
        subsampled = False
        mono = False
    elif colorspace == "mono":
        subsampled = False
        mono = True
    else:
        raise TensorIOError(f"unsupported y4m colorspace C{colorspace}")

    y_size = width * height
    c_size = 0 if mono else (y_size // 4 if subsampled else y_size)
    frames = []
    while True:
        line = bytearray()
        ch = stream.read(1)
        if not ch:
            break
        while ch != b"\n":
            line.extend(ch)
            ch = stream.read(1)
            if not ch:
                raise TensorIOError("truncated y4m frame header")
        if not bytes(line).startswith(b"FRAME"):
            raise TensorIOError("malformed y4m frame header")
        raw = stream.read(y_size + 2 * c_size)
        if len(raw) != y_size + 2 * c_size:
            raise TensorIOError("truncated y4m frame payload")
        y = np.frombuffer(raw, dtype=np.uint8, count=y_size).reshape(height, width)
        if mono:
            frames.append(_to_unit(y)[:, :, None])
            continue
        cb = np.frombuffer(raw, dtype=np.uint8, count=c_size, offset=y_size)
        cr = np.frombuffer(raw, dtype=np.uint8, count=c_size, offset=y_size + c_size)
        if subsampled:
            cb = cb.reshape(height // 2, width // 2).repeat(2, 0).repeat(2, 1)
            cr = cr.reshape(height // 2, width // 2).repeat(2, 0).repeat(2, 1)
        else:
            cb = cb.reshape(height, width)
            cr = cr.reshape(height, width)
        ycc = np.stack([_to_unit(y), _to_unit(cb), _to_unit(cr)], axis=-1)
        frames.append(np.clip(_ycbcr_to_rgb(ycc), 0.0, 1.0))
    if not frames:
        raise TensorIOError("y4m stream contains no frames")
    return FrameSequence(samples=np.stack(frames, axis=0))


def write_y4m(seq, stream, colorspace="444", fps=(25, 1)):
    """Write a FrameSequence as an 8-bit y4m stream.

    colorspace "444" or "420" for color input (420 downsamples chroma by
    2x2 averaging); mono input always writes Cmono.
    """
    if seq.channels == 1:
        cs = "mono"
    elif colorspace in ("444", "420"):
        cs = colorspace
    else:
        raise TensorIOError(f"unsupported y4m colorspace C{colorspace}")
    if cs == "420" and (seq.height % 2 or seq.width % 2):
        raise TensorIOError("4:2:0 needs even dimensions")
    header = f"YUV4MPEG2 W{seq.width} H{seq.height} F{fps[0]}:{fps[1]} Ip A1:1 C{cs}\n"
    stream.write(header.encode())
    for i in range(seq.frames):
        stream.write(b"FRAME\n")
        frame = seq.samples[i]
        if cs == "mono":
            stream.write(_to_uint8(frame[:, :, 0]).tobytes())
            continue
        ycc = _rgb_to_ycbcr(frame)
        y = _to_uint8(ycc[:, :, 0])
        cb = ycc[:, :, 1]
        cr = ycc[:, :, 2]
        if cs == "420":
            cb = cb.reshape(seq.height // 2, 2, seq.width // 2, 2).mean(axis=(1, 3))
            cr = cr.reshape(seq.height // 2, 2, seq.width // 2, 2).mean(axis=(1, 3))
        stream.write(y.tobytes())
        stream.write(_to_uint8(cb).tobytes())
        stream.write(_to_uint8(cr).tobytes())


def y4m_bytes(seq, colorspace="444"):
    buf = io.BytesIO()
    write_y4m(seq, buf, colorspace=colorspace)
    return buf.getvalue()
