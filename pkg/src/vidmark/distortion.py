"""Distortion suite for robustness evaluation.

Attacks: random erasing (one mid-gray rectangle, shared across frames),
Gaussian blur (odd kernel, sigma = 0.3*((k-1)/2 - 1) + 0.8, reflected
borders), additive Gaussian noise (clipped), rotation about the frame
center (bilinear, zero fill), and a real H.264 round trip through an
external encoder speaking y4m on its pipes.

`realize` resolves any sampled parameter (noise sigma, rotation angle,
erase rectangle) into concrete values using the spec seed, so the same
realized spec replays bit-identically and can be recorded/inverted.
"""

import shutil
import subprocess
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve1d

from .tensor_io import FrameSequence, read_y4m, y4m_bytes

KINDS = ("none", "erase", "blur", "noise", "rotate", "h264")

ERASE_RATIO_RANGE = (0.05, 0.20)
BLUR_KERNELS = (3, 5, 7)
NOISE_SIGMA_MAX = 0.2
ROTATE_MAX_DEG = 30.0
CODEC_TIMEOUT_S = 120


class CodecUnavailableError(RuntimeError):
    """No external H.264 encoder/decoder on the executable path."""


@dataclass(frozen=True)
class DistortionSpec:
    kind: str = "none"
    ratio: float = None  # erase area fraction
    kernel: int = None  # blur kernel size
    sigma: float = None  # noise std; None = sample from U(0, 0.2)
    angle: float = None  # rotation degrees; None = sample from (-30, 30)
    crf: int = 24
    seed: int = 0
    rect: tuple = None  # realized erase rectangle (y0, x0, h, w)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distortion kind {self.kind!r}")
        if self.kind == "erase" and self.ratio is not None:
            lo, hi = ERASE_RATIO_RANGE
            if not lo <= self.ratio <= hi:
                raise ValueError(f"erase ratio {self.ratio} outside [{lo}, {hi}]")
        if self.kind == "blur" and self.kernel not in BLUR_KERNELS:
            raise ValueError(f"blur kernel {self.kernel} not in {BLUR_KERNELS}")
        if self.kind == "noise" and self.sigma is not None:
            if not 0.0 <= self.sigma <= NOISE_SIGMA_MAX:
                raise ValueError(f"noise sigma {self.sigma} outside [0, {NOISE_SIGMA_MAX}]")
        if self.kind == "rotate" and self.angle is not None:
            if not -ROTATE_MAX_DEG < self.angle < ROTATE_MAX_DEG:
                raise ValueError(f"angle {self.angle} outside ({-ROTATE_MAX_DEG}, {ROTATE_MAX_DEG})")
        if self.kind == "h264" and not 0 <= self.crf <= 51:
            raise ValueError(f"crf {self.crf} outside [0, 51]")


def realize(spec, frame_shape=None):
    """Resolve sampled parameters to concrete, replayable values."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed & 0x7FFFFFFF, 1]))
    if spec.kind == "noise" and spec.sigma is None:
        return replace(spec, sigma=float(rng.uniform(0.0, NOISE_SIGMA_MAX)))
    if spec.kind == "rotate" and spec.angle is None:
        return replace(spec, angle=float(rng.uniform(-ROTATE_MAX_DEG, ROTATE_MAX_DEG)))
    if spec.kind == "erase" and spec.rect is None:
        if spec.ratio is None:
            raise ValueError("erase needs a ratio")
        if frame_shape is None:
            raise ValueError("erase realization needs the frame shape")
        h, w = frame_shape
        area = spec.ratio * h * w
        aspect = rng.uniform(0.5, 2.0)
        rect_h = int(np.clip(round(np.sqrt(area * aspect)), 1, h))
        rect_w = int(np.clip(round(area / rect_h), 1, w))
        y0 = int(rng.integers(0, h - rect_h + 1))
        x0 = int(rng.integers(0, w - rect_w + 1))
        return replace(spec, rect=(y0, x0, rect_h, rect_w))
    return spec


def gaussian_kernel1d(size):
    """Normalized 1D Gaussian taps with the conventional sigma for `size`."""
    sigma = 0.3 * ((size - 1) / 2 - 1) + 0.8
    xs = np.arange(size) - (size - 1) / 2
    g = np.exp(-(xs ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _rotate_frame(frame, angle_deg):
    """Rotate one frame about its center; bilinear sampling, zero fill."""
    h, w = frame.shape[:2]
    theta = np.deg2rad(angle_deg)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys, xs = np.mgrid[0:h, 0:w]
    dy, dx = ys - cy, xs - cx
    # inverse map of a counterclockwise rotation in (x right, y down) coords
    src_y = cos_t * dy + sin_t * dx + cy
    src_x = -sin_t * dy + cos_t * dx + cx
    y0 = np.floor(src_y).astype(np.int64)
    x0 = np.floor(src_x).astype(np.int64)
    fy = src_y - y0
    fx = src_x - x0
    out = np.zeros_like(frame)
    for oy, ox, weight in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        yy, xx = y0 + oy, x0 + ox
        valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        yc, xc = np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)
        out += (weight * valid)[:, :, None] * frame[yc, xc]
    return out


def apply(video, spec):
    """Apply one distortion; output dims always match the input.

    Deterministic given the spec seed.  Unrealized sampled parameters
    are realized first (see :func:`realize`).
    """
    spec = realize(spec, frame_shape=(video.height, video.width))
    x = video.samples
    if spec.kind == "none":
        return FrameSequence(samples=x.copy())
    if spec.kind == "erase":
        y0, x0, rh, rw = spec.rect
        out = x.copy()
        out[:, y0:y0 + rh, x0:x0 + rw, :] = 0.5
        return FrameSequence(samples=out)
    if spec.kind == "blur":
        taps = gaussian_kernel1d(spec.kernel)
        out = convolve1d(x, taps, axis=1, mode="reflect")
        out = convolve1d(out, taps, axis=2, mode="reflect")
        return FrameSequence(samples=np.clip(out, 0.0, 1.0))
    if spec.kind == "noise":
        if spec.sigma == 0.0:
            return FrameSequence(samples=x.copy())
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed & 0x7FFFFFFF, 2]))
        out = x + rng.normal(0.0, spec.sigma, size=x.shape)
        return FrameSequence(samples=np.clip(out, 0.0, 1.0))
    if spec.kind == "rotate":
        out = np.stack(
            [_rotate_frame(x[f], spec.angle) for f in range(video.frames)], axis=0
        )
        return FrameSequence(samples=np.clip(out, 0.0, 1.0))
    if spec.kind == "h264":
        return h264_roundtrip(video, spec.crf)
    raise ValueError(f"unknown distortion kind {spec.kind!r}")


def find_encoder():
    return shutil.which("ffmpeg")


def h264_roundtrip(video, crf=24):
    """Encode + decode through a real H.264 codec (ffmpeg), via y4m pipes.

    Raises CodecUnavailableError when no encoder is on the path, so
    callers can skip explicitly rather than fail silently.
    """
    ffmpeg = find_encoder()
    if ffmpeg is None:
        raise CodecUnavailableError("codec unavailable: no ffmpeg on PATH")
    pix = "yuv444p" if video.channels == 3 else "gray"
    raw = y4m_bytes(video, colorspace="444")
    with tempfile.TemporaryDirectory() as tmp:
        bitstream = Path(tmp) / "stream.h264"
        encode = [
            ffmpeg, "-hide_banner", "-loglevel", "error", "-y",
            "-f", "yuv4mpegpipe", "-i", "pipe:0",
            "-c:v", "libx264", "-preset", "veryfast", "-crf", str(crf),
            "-pix_fmt", pix, "-f", "h264", str(bitstream),
        ]
        subprocess.run(encode, input=raw, check=True, timeout=CODEC_TIMEOUT_S,
                       stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        decode = [
            ffmpeg, "-hide_banner", "-loglevel", "error", "-y",
            "-f", "h264", "-i", str(bitstream),
            "-pix_fmt", "yuv444p" if video.channels == 3 else "gray",
            "-f", "yuv4mpegpipe", "pipe:1",
        ]
        result = subprocess.run(decode, check=True, timeout=CODEC_TIMEOUT_S,
                                stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    import io

    decoded = read_y4m(io.BytesIO(result.stdout))
    if decoded.samples.shape != video.samples.shape:
        raise RuntimeError(
            f"codec changed dimensions: {decoded.samples.shape} vs {video.samples.shape}"
        )
    return decoded


def spec_to_record(spec):
    """Serialize a realized spec as key=value lines for the attack record."""
    lines = [f"kind={spec.kind}", f"seed={spec.seed}"]
    if spec.kind == "erase":
        lines.append(f"ratio={spec.ratio!r}")
        lines.append("rect={},{},{},{}".format(*spec.rect))
    elif spec.kind == "blur":
        lines.append(f"kernel={spec.kernel}")
    elif spec.kind == "noise":
        lines.append(f"sigma={spec.sigma!r}")
    elif spec.kind == "rotate":
        lines.append(f"angle={spec.angle!r}")
    elif spec.kind == "h264":
        lines.append(f"crf={spec.crf}")
    return "\n".join(lines) + "\n"


def record_to_spec(text):
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        fields[key] = value
    kind = fields["kind"]
    kwargs = {"kind": kind, "seed": int(fields.get("seed", 0))}
    if kind == "erase":
        kwargs["ratio"] = float(fields["ratio"])
        kwargs["rect"] = tuple(int(t) for t in fields["rect"].split(","))
    elif kind == "blur":
        kwargs["kernel"] = int(fields["kernel"])
    elif kind == "noise":
        kwargs["sigma"] = float(fields["sigma"])
    elif kind == "rotate":
        kwargs["angle"] = float(fields["angle"])
    elif kind == "h264":
        kwargs["crf"] = int(fields["crf"])
    return DistortionSpec(**kwargs)
