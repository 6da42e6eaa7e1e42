"""End-to-end embed/extract orchestration shared by the CLI and tests."""

import numpy as np

from . import embedder, matching, poscodec
from .embedder import QimConfig


def build_config(wm, video, delta=embedder.DEFAULT_DELTA,
                 bit_depth=embedder.DEFAULT_BIT_DEPTH, patch_size=16, seed=0):
    """Derive the QIM configuration from watermark/video geometry."""
    patches_h = wm.height // patch_size
    patches_w = wm.width // patch_size
    total = patches_h * patches_w
    cap = -(-total // video.frames)
    cfg = QimConfig(
        delta=delta,
        bit_depth=bit_depth,
        patch_size=patch_size,
        region_grid=matching.region_grid(cap),
        seed=seed,
        total_patches=total,
        patch_grid=(patches_h, patches_w),
        wm_channels=wm.channels,
    )
    cfg.check_capacity(video.height, video.width, video.channels)
    return cfg


def embed_video(video, wm, delta=embedder.DEFAULT_DELTA,
                bit_depth=embedder.DEFAULT_BIT_DEPTH, patch_size=16, seed=0,
                threads=1):
    """Plan and embed; returns (marked video, plan, config)."""
    cfg = build_config(wm, video, delta, bit_depth, patch_size, seed)
    plan_ = matching.plan(wm, video, patch_size=patch_size, seed=seed)
    marked = embedder.embed(video, wm, plan_, cfg, threads=threads)
    return marked, plan_, cfg


def select_patches(decoded, total):
    """Keep the `total` most confident decoded slots, in slot order.

    With the saturated default geometry every slot carries a patch and
    this is the identity; sparser plans leave unembedded slots decoding
    noise, which this drops blindly by confidence.
    """
    if len(decoded) < total:
        raise ValueError(f"only {len(decoded)} slots decoded, need {total}")
    if len(decoded) == total:
        return list(decoded)
    ranked = sorted(range(len(decoded)), key=lambda i: (-decoded[i].confidence, i))
    keep = sorted(ranked[:total])
    return [decoded[i] for i in keep]


def extract_video(video, cfg, threads=1):
    """Blind extraction + layout recovery; returns (watermark, decoded)."""
    decoded = embedder.extract(video, cfg, threads=threads)
    chosen = select_patches(decoded, cfg.total_patches)
    recovered = poscodec.recover_layout(chosen, cfg.total_patches, grid=cfg.patch_grid)
    return recovered, decoded


def content_bit_error_rate(cfg, wm, plan_, decoded):
    """Fraction of embedded content bits decoded wrongly, slot by slot.

    Compares each planned slot's decoded payload against the quantized
    patch that was embedded there (ground truth from the plan), so the
    measure is independent of position-decode mistakes.
    """
    patches = matching.partition(wm, cfg.patch_size)
    by_slot = {d.slot: d for d in decoded}
    total = 0
    wrong = 0
    for a in plan_.assignments:
        truth = embedder.quantize_samples(
            patches.patches[a.patch][:, :, : cfg.wm_channels], cfg.bit_depth
        )
        got = embedder.quantize_samples(by_slot[(a.frame, a.region)].content, cfg.bit_depth)
        diff = np.bitwise_xor(truth, got)
        wrong += int(np.unpackbits(diff.reshape(-1, 1), axis=1)[:, 8 - cfg.bit_depth:].sum())
        total += truth.size * cfg.bit_depth
    return wrong / total if total else 0.0


def position_accuracy(plan_, decoded):
    """Fraction of planned slots whose decoded index matches the plan."""
    by_slot = {d.slot: d for d in decoded}
    hits = sum(
        1 for a in plan_.assignments if by_slot[(a.frame, a.region)].index == a.patch
    )
    return hits / len(plan_.assignments) if plan_.assignments else 1.0
