"""Scratch: calibrate QIM delta against the 40 dB video floor and blur
position-decode robustness. Not part of the deliverable."""

import time

import numpy as np

from vidmark import distortion, metrics, pipeline
from vidmark.tensor_io import FrameSequence, WatermarkImage
from scipy.ndimage import gaussian_filter


def natural_video(frames, height, width, channels=3, seed=7, smooth=6.0):
    rng = np.random.default_rng(seed)
    base = rng.normal(0.5, 0.35, size=(frames, height, width, channels))
    base = gaussian_filter(base, sigma=(0.8, smooth, smooth, 0))
    # restore contrast lost to smoothing
    base = 0.5 + (base - base.mean()) * (0.25 / (base.std() + 1e-9))
    return FrameSequence(samples=np.clip(base, 0.0, 1.0))


def natural_logo(height, width, seed=11):
    rng = np.random.default_rng(seed)
    base = rng.normal(0.5, 0.4, size=(height, width, 3))
    base = gaussian_filter(base, sigma=(3.0, 3.0, 0))
    base = 0.5 + (base - base.mean()) * (0.3 / (base.std() + 1e-9))
    ys, xs = np.mgrid[0:height, 0:width]
    ring = ((ys - height / 2) ** 2 + (xs - width / 2) ** 2) ** 0.5
    mask = ((ring > height * 0.2) & (ring < height * 0.35)).astype(float)
    base = base * (1 - mask[:, :, None]) + mask[:, :, None] * np.array([0.9, 0.2, 0.15])
    return WatermarkImage(samples=np.clip(base, 0.0, 1.0))


video = natural_video(8, 320, 512)
logo = natural_logo(256, 256)

for delta in (0.08, 0.05, 0.04, 0.035, 0.03, 0.025):
    t0 = time.time()
    marked, plan_, cfg = pipeline.embed_video(video, logo, delta=delta, seed=1)
    t1 = time.time()
    v_psnr = metrics.psnr(video.samples, marked.samples)
    # clean round trip
    decoded = __import__("vidmark.embedder", fromlist=["extract"]).extract(marked, cfg)
    pos_acc = pipeline.position_accuracy(plan_, decoded)
    ber = pipeline.content_bit_error_rate(cfg, logo, plan_, decoded)
    # blur kernel 3
    blurred = distortion.apply(marked, distortion.DistortionSpec(kind="blur", kernel=3))
    dec_blur = __import__("vidmark.embedder", fromlist=["extract"]).extract(blurred, cfg)
    pos_blur = pipeline.position_accuracy(plan_, dec_blur)
    ber_blur = pipeline.content_bit_error_rate(cfg, logo, plan_, dec_blur)
    t2 = time.time()
    print(
        f"delta={delta:<6} videoPSNR={v_psnr:6.2f} clean(pos={pos_acc:.3f} ber={ber:.4f}) "
        f"blur3(pos={pos_blur:.3f} ber={ber_blur:.3f}) embed={t1-t0:.1f}s rest={t2-t1:.1f}s"
    )
