"""Scratch: sanity-check robustness monotonicity + timings at the default
delta. Not part of the deliverable."""

import time

import numpy as np

from vidmark import distortion, embedder, metrics, pipeline
from scratch_calibrate import natural_logo, natural_video

video = natural_video(8, 320, 512)
logo = natural_logo(256, 256)

t0 = time.time()
marked, plan_, cfg = pipeline.embed_video(video, logo, seed=1)
print(f"embed {time.time()-t0:.2f}s videoPSNR={metrics.psnr(video.samples, marked.samples):.2f}")

runs = 5
for label, specs in (
    ("noise", [distortion.DistortionSpec(kind="noise", sigma=s, seed=0)
               for s in (0.0, 0.05, 0.1, 0.2)]),
    ("erase", [distortion.DistortionSpec(kind="erase", ratio=r, seed=0)
               for r in (0.05, 0.10, 0.15, 0.20)]),
):
    means = []
    t0 = time.time()
    for spec in specs:
        bers = []
        for run in range(runs):
            from dataclasses import replace
            attacked = distortion.apply(marked, replace(spec, seed=run * 31 + 7))
            decoded = embedder.extract(attacked, cfg)
            bers.append(pipeline.content_bit_error_rate(cfg, logo, plan_, decoded))
        means.append(float(np.mean(bers)))
    print(f"{label}: {['%.4f' % m for m in means]} ({time.time()-t0:.1f}s, {runs} runs/leg)")

# rotation round trip sanity
spec = distortion.realize(distortion.DistortionSpec(kind="rotate", seed=3),
                          frame_shape=(video.height, video.width))
rot = distortion.apply(marked, spec)
from dataclasses import replace
unrot = distortion.apply(rot, replace(spec, angle=-spec.angle))
decoded = embedder.extract(unrot, cfg)
print(f"rotate {spec.angle:.1f}deg -> pos_acc={pipeline.position_accuracy(plan_, decoded):.3f} "
      f"ber={pipeline.content_bit_error_rate(cfg, logo, plan_, decoded):.3f}")

# erase 5%: position indices all correct?
ok = 0
trials = 20
t0 = time.time()
for t in range(trials):
    attacked = distortion.apply(
        marked, distortion.DistortionSpec(kind="erase", ratio=0.05, seed=1000 + t))
    decoded = embedder.extract(attacked, cfg)
    ok += pipeline.position_accuracy(plan_, decoded) == 1.0
print(f"erase5%: all-correct positions in {ok}/{trials} trials ({time.time()-t0:.1f}s)")
