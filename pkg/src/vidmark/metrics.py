"""Quality metrics and the combined reconstruction objective.

PSNR assumes samples in [0, 1] (peak 1.0); identical inputs report
infinity.  SSIM follows the standard formulation: 11x11 Gaussian window
with sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1.0, computed per
frame and channel and averaged.  The combined objective is
l_total = l_video + lambda * l_watermark with both terms plain MSE.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

DEFAULT_LAMBDA = 0.75

_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_SIGMA = 1.5
_SSIM_WINDOW = 11


def mse_pair(a, b):
    """Mean squared difference over all samples."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(a, b):
    """10*log10(1/MSE); inf marks identical inputs."""
    err = mse_pair(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


def mae(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))


def rmse(a, b):
    return math.sqrt(mse_pair(a, b))


def _ssim_window():
    xs = np.arange(_SSIM_WINDOW) - (_SSIM_WINDOW - 1) / 2
    g = np.exp(-(xs ** 2) / (2.0 * _SSIM_SIGMA ** 2))
    return g / g.sum()


def _filter2d(plane, taps):
    out = convolve1d(plane, taps, axis=0, mode="reflect")
    return convolve1d(out, taps, axis=1, mode="reflect")


def ssim_plane(a, b):
    """SSIM map average for one 2D plane pair."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    taps = _ssim_window()
    c1 = _SSIM_K1 ** 2
    c2 = _SSIM_K2 ** 2
    mu_a = _filter2d(a, taps)
    mu_b = _filter2d(b, taps)
    var_a = _filter2d(a * a, taps) - mu_a ** 2
    var_b = _filter2d(b * b, taps) - mu_b ** 2
    cov = _filter2d(a * b, taps) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b):
    """Mean SSIM over frames and channels; accepts (H,W,C) or (F,H,W,C)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 3:
        a = a[None]
        b = b[None]
    if a.ndim != 4:
        raise ValueError(f"expected 3D or 4D input, got shape {a.shape}")
    scores = [
        ssim_plane(a[f, :, :, c], b[f, :, :, c])
        for f in range(a.shape[0])
        for c in range(a.shape[3])
    ]
    return float(np.mean(scores))


@dataclass(frozen=True)
class PairStats:
    psnr: float
    mae: float
    rmse: float
    ssim: float


@dataclass(frozen=True)
class MetricsReport:
    video: PairStats
    watermark: PairStats
    l_video: float
    l_watermark: float
    l_total: float
    weight: float  # the lambda balancing watermark fidelity


def pair_stats(a, b):
    return PairStats(psnr=psnr(a, b), mae=mae(a, b), rmse=rmse(a, b), ssim=ssim(a, b))


def evaluate(video, marked, wm, recovered, weight=DEFAULT_LAMBDA):
    """Full report comparing (video, marked) and (wm, recovered)."""
    l_video = mse_pair(video.samples, marked.samples)
    l_watermark = mse_pair(wm.samples, recovered.samples)
    return MetricsReport(
        video=pair_stats(video.samples, marked.samples),
        watermark=pair_stats(wm.samples, recovered.samples),
        l_video=l_video,
        l_watermark=l_watermark,
        l_total=l_video + weight * l_watermark,
        weight=weight,
    )


def format_report(report):
    """Line-oriented key=value rendering used by the eval command."""

    def fmt(x):
        return "identical" if math.isinf(x) else f"{x:.6f}"

    lines = []
    for name, stats in (("video", report.video), ("watermark", report.watermark)):
        lines.append(f"{name}.psnr={fmt(stats.psnr)}")
        lines.append(f"{name}.mae={stats.mae:.6f}")
        lines.append(f"{name}.rmse={stats.rmse:.6f}")
        lines.append(f"{name}.ssim={stats.ssim:.6f}")
    lines.append(f"loss.video={report.l_video:.8f}")
    lines.append(f"loss.watermark={report.l_watermark:.8f}")
    lines.append(f"loss.total={report.l_total:.8f}")
    lines.append(f"loss.lambda={report.weight}")
    return "\n".join(lines) + "\n"
