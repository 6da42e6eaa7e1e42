"""Blind frequency-domain embedding/extraction via quantization index
modulation (QIM) on single-level Haar LL coefficients.

Wire format, per (frame, region) slot and video channel:
  * the region is DWT-transformed; only LL coefficients carry bits.
  * a per-slot, per-channel permutation of the LL raster (seeded from
    the shared key) selects carrier coefficients, interleaving payload
    across the region so localized erasure degrades gracefully.
  * channels below the watermark channel count carry the patch content,
    patch_size^2 samples quantized to bit_depth bits, MSB first, raster
    order; every channel fills its remaining capacity with replicas of
    the K-bit position code (replica-major, bit-minor).
  * a bit b snaps its coefficient to the nearest point of the lattice
    {2k*delta} (b=0) or {(2k+1)*delta} (b=1); decode is the parity of
    round(c / delta).

Extraction is blind: it needs only the key (geometry + delta + seed),
never the original video or the assignment plan.  Decoded position
replicas are averaged per bit and re-rendered into a position plane so
the position codec's confidence machinery applies unchanged.
"""

from dataclasses import dataclass, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import poscodec
from .tensor_io import FrameSequence
from .wavelet import dwt2, idwt2

# Calibrated so the default geometry lands comfortably above the 40 dB
# video-quality floor (see tests); smaller delta = less visible, less robust.
DEFAULT_DELTA = 0.025
DEFAULT_BIT_DEPTH = 4
MIN_REPLICATION = 4

# Residual lattice offset accepted at embed time, as a fraction of delta.
# Keeps decode correct after 8-bit container quantization (<= 1/255 per
# LL coefficient) with margin: 0.3 + (1/255)/delta < 0.5 for delta >= 0.02.
_EMBED_TOLERANCE = 0.3
_CLIP_RETRIES = 3


class CapacityError(ValueError):
    """Region geometry cannot hold the payload."""


class EmbedError(RuntimeError):
    """Clipping kept perturbing embedded coefficients beyond retries."""


@dataclass(frozen=True)
class QimConfig:
    """Shared-key parameters; geometry + delta + seed are the extraction key."""

    delta: float = DEFAULT_DELTA
    bit_depth: int = DEFAULT_BIT_DEPTH
    patch_size: int = 16
    region_grid: tuple = (4, 8)
    seed: int = 0
    total_patches: int = 256
    patch_grid: tuple = (16, 16)
    wm_channels: int = 3

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if not 1 <= self.bit_depth <= 8:
            raise ValueError("bit_depth must be in [1, 8]")
        if self.patch_grid[0] * self.patch_grid[1] != self.total_patches:
            raise ValueError("patch_grid inconsistent with total_patches")

    @property
    def code_bits(self):
        return poscodec.code_length(self.total_patches)

    def content_bits(self, channel):
        if channel < self.wm_channels:
            return self.patch_size * self.patch_size * self.bit_depth
        return 0

    def replication(self, ll_count, channel):
        return (ll_count - self.content_bits(channel)) // self.code_bits

    def region_shape(self, height, width):
        g_h, g_w = self.region_grid
        if height % g_h or width % g_w:
            raise CapacityError(
                f"frame {height}x{width} not divisible by region grid {self.region_grid}"
            )
        rh, rw = height // g_h, width // g_w
        if rh % 2 or rw % 2:
            raise CapacityError(f"region {rh}x{rw} must have even dims")
        return rh, rw

    def check_capacity(self, height, width, video_channels):
        """Raise unless every channel fits its payload with R >= 4."""
        rh, rw = self.region_shape(height, width)
        ll_count = (rh // 2) * (rw // 2)
        if self.wm_channels > video_channels:
            raise CapacityError(
                f"watermark has {self.wm_channels} channels, video only {video_channels}"
            )
        for ch in range(video_channels):
            content = self.content_bits(ch)
            if content > ll_count:
                raise CapacityError(
                    f"channel {ch}: {content} content bits exceed {ll_count} LL slots"
                )
            if self.replication(ll_count, ch) < MIN_REPLICATION:
                raise CapacityError(
                    f"channel {ch}: position replication below {MIN_REPLICATION}"
                )
        return ll_count


def qim_embed_bits(coeffs, bits, delta):
    """Snap the first len(bits) coefficients to their bit lattices.

    Perturbation is at most delta per coefficient; the rest pass through.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    coeffs = np.asarray(coeffs, dtype=np.float64)
    bits = np.asarray(bits)
    if bits.size > coeffs.size:
        raise ValueError(f"{bits.size} bits exceed {coeffs.size} coefficients")
    out = coeffs.copy()
    c = coeffs[:bits.size]
    even = 2.0 * delta * np.round(c / (2.0 * delta))
    odd = 2.0 * delta * np.round((c - delta) / (2.0 * delta)) + delta
    out[:bits.size] = np.where(bits == 0, even, odd)
    return out


def qim_decode_bits(coeffs, count, delta):
    """Nearest-lattice bit decision: parity of round(c / delta)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if count > coeffs.size:
        raise ValueError(f"requested {count} bits from {coeffs.size} coefficients")
    return (np.rint(coeffs[:count] / delta).astype(np.int64) & 1).astype(np.uint8)


def quantize_samples(samples, bit_depth):
    """Uniform quantization of [0,1] samples to integer levels."""
    levels = (1 << bit_depth) - 1
    return np.rint(np.clip(samples, 0.0, 1.0) * levels).astype(np.uint8)


def dequantize_samples(q, bit_depth):
    levels = (1 << bit_depth) - 1
    return q.astype(np.float64) / levels


def samples_to_bits(samples, bit_depth):
    """MSB-first bit stream of quantized samples, raster order."""
    q = quantize_samples(samples, bit_depth)
    return np.unpackbits(q.reshape(-1, 1), axis=1)[:, 8 - bit_depth:].ravel()


def bits_to_samples(bits, bit_depth):
    weights = 1 << np.arange(bit_depth - 1, -1, -1)
    vals = (bits.reshape(-1, bit_depth).astype(np.int64) * weights).sum(axis=1)
    return dequantize_samples(vals, bit_depth)


def _carrier_permutation(cfg, frame, region, channel, ll_count):
    rng = np.random.default_rng(
        np.random.SeedSequence([cfg.seed & 0x7FFFFFFF, frame, region, channel])
    )
    return rng.permutation(ll_count)


def _region_rect(cfg, height, width, region):
    rh, rw = cfg.region_shape(height, width)
    r, q = divmod(region, cfg.region_grid[1])
    return r * rh, q * rw, rh, rw


def _channel_payload(cfg, patch, pos_bits, channel, ll_count):
    """Bit stream for one channel: content, then position replicas."""
    chunks = []
    if channel < cfg.wm_channels:
        chunks.append(samples_to_bits(patch[:, :, channel], cfg.bit_depth))
    reps = cfg.replication(ll_count, channel)
    if reps > 0:
        chunks.append(np.tile(pos_bits, reps))
    return np.concatenate(chunks) if chunks else np.empty(0, dtype=np.uint8)


def _feasible_ll_bounds(region_pixels, channel):
    """Exact per-coefficient LL range keeping the 2x2 block in [0, 1].

    Each pixel block depends on one LL coefficient plus the three detail
    coefficients: pixel = (ll + e) / 2 with e fixed while details are
    untouched, so 0 <= pixel <= 1 bounds ll to [max(-e), min(2 - e)].
    """
    h, w = region_pixels.shape[:2]
    blocks = region_pixels[:, :, channel].reshape(h // 2, 2, w // 2, 2)
    ll = blocks.sum(axis=(1, 3)) / 2.0
    e = 2.0 * blocks - ll[:, None, :, None]
    lo = (-e).max(axis=(1, 3)).ravel()
    hi = (2.0 - e).min(axis=(1, 3)).ravel()
    return lo, hi


def _feasible_qim(coeffs, bits, delta, lo, hi):
    """QIM targets constrained to each coefficient's feasible interval.

    Falls back to the unconstrained nearest lattice point (accepting
    sample clipping) when no point of the required parity fits.
    """
    target = qim_embed_bits(coeffs, bits, delta)
    b = np.asarray(bits, dtype=np.float64)
    lo_pt = (2.0 * np.ceil((lo / delta - b) / 2.0) + b) * delta
    hi_pt = (2.0 * np.floor((hi / delta - b) / 2.0) + b) * delta
    fits = lo_pt <= hi_pt
    return np.where(fits, np.clip(target, lo_pt, hi_pt), target)


def _embed_region(cfg, region_pixels, frame, region, patch, patch_index):
    """Embed one patch (+ its position code) into one region, verified.

    Lattice targets are chosen inside each block's feasible LL interval
    so sample clipping is the exception; where a block cannot host the
    required parity without clipping, the result is re-checked and
    re-embedded up to 3 times before giving up.
    """
    ll_count = (region_pixels.shape[0] // 2) * (region_pixels.shape[1] // 2)
    channels = region_pixels.shape[2]
    pos_bits = poscodec.index_bits(patch_index, cfg.total_patches)
    payloads = [
        _channel_payload(cfg, patch, pos_bits, ch, ll_count) for ch in range(channels)
    ]
    perms = [
        _carrier_permutation(cfg, frame, region, ch, ll_count) for ch in range(channels)
    ]

    work = region_pixels
    for _ in range(1 + _CLIP_RETRIES):
        bands = dwt2(work)
        ll = bands.ll.copy()
        for ch in range(channels):
            flat = ll[:, :, ch].ravel()
            lo, hi = _feasible_ll_bounds(work, ch)
            idx = perms[ch][: payloads[ch].size]
            flat[idx] = _feasible_qim(
                flat[idx], payloads[ch], cfg.delta, lo[idx], hi[idx]
            )
            ll[:, :, ch] = flat.reshape(ll.shape[:2])
        work = np.clip(idwt2(replace(bands, ll=ll)), 0.0, 1.0)
        if _verify_region(cfg, work, perms, payloads):
            return work
    raise EmbedError(
        f"clipping keeps corrupting payload in frame {frame} region {region}; "
        f"lower delta or avoid saturated content"
    )


def _verify_region(cfg, region_pixels, perms, payloads):
    bands = dwt2(region_pixels)
    tol = _EMBED_TOLERANCE * cfg.delta
    for ch, payload in enumerate(payloads):
        if payload.size == 0:
            continue
        flat = bands.ll[:, :, ch].ravel()
        carriers = flat[perms[ch][: payload.size]]
        if np.any(qim_decode_bits(carriers, payload.size, cfg.delta) != payload):
            return False
        # distance to the intended lattice point must leave margin for
        # 8-bit container quantization noise
        offset = np.abs(carriers - cfg.delta * np.rint(carriers / cfg.delta))
        if offset.max() > tol:
            return False
    return True


def embed(video, wm, plan, cfg, threads=1):
    """Embed a planned watermark into a video.

    Regions outside the plan are bit-identical to the input; samples are
    clipped to [0, 1].  Content is quantized to cfg.bit_depth bits, so
    the noiseless round trip recovers exactly that quantization.
    """
    cfg.check_capacity(video.height, video.width, video.channels)
    from .matching import partition

    patches = partition(wm, cfg.patch_size) if plan.assignments else None
    out = video.samples.copy()

    def run(assignment):
        y0, x0, rh, rw = _region_rect(cfg, video.height, video.width, assignment.region)
        region = out[assignment.frame, y0:y0 + rh, x0:x0 + rw, :]
        new_region = _embed_region(
            cfg, region, assignment.frame, assignment.region,
            patches.patches[assignment.patch], assignment.patch,
        )
        return assignment, (y0, x0, rh, rw), new_region

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, plan.assignments))
    else:
        results = [run(a) for a in plan.assignments]
    for assignment, (y0, x0, rh, rw), new_region in results:
        out[assignment.frame, y0:y0 + rh, x0:x0 + rw, :] = new_region
    return FrameSequence(samples=out)


def _decode_region(cfg, region_pixels, frame, region):
    ll_count = (region_pixels.shape[0] // 2) * (region_pixels.shape[1] // 2)
    channels = region_pixels.shape[2]
    k = cfg.code_bits
    bands = dwt2(region_pixels)
    content = np.zeros((cfg.patch_size, cfg.patch_size, cfg.wm_channels))
    replica_chunks = []
    for ch in range(channels):
        flat = bands.ll[:, :, ch].ravel()
        perm = _carrier_permutation(cfg, frame, region, ch, ll_count)
        n_content = cfg.content_bits(ch)
        reps = cfg.replication(ll_count, ch)
        total = n_content + reps * k
        bits = qim_decode_bits(flat[perm[:total]], total, cfg.delta)
        if n_content:
            content[:, :, ch] = bits_to_samples(bits[:n_content], cfg.bit_depth).reshape(
                cfg.patch_size, cfg.patch_size
            )
        if reps:
            replica_chunks.append(bits[n_content:].reshape(reps, k))
    replicas = np.concatenate(replica_chunks, axis=0)
    bit_means = replicas.mean(axis=0)
    plane = render_position_plane(bit_means, cfg.patch_size)
    prob, confidence, index = poscodec.decode_position(plane, cfg.total_patches)
    return poscodec.DecodedPatch(
        content=content, prob=prob, confidence=confidence, index=index,
        slot=(frame, region),
    )


def render_position_plane(bit_values, patch_size):
    """Render per-bit values in [0,1] into the replicated-plane layout."""
    k = len(bit_values)
    plane = np.empty(patch_size * patch_size, dtype=np.float64)
    for j, (lo, hi) in enumerate(poscodec._block_slices(patch_size, k)):
        plane[lo:hi] = bit_values[j]
    return plane.reshape(patch_size, patch_size)


def extract(video, cfg, threads=1):
    """Blind-extract every (frame, region) slot of a watermarked video.

    Returns frames * capacity DecodedPatch records in slot order; layout
    recovery is the caller's next step.
    """
    cfg.check_capacity(video.height, video.width, video.channels)
    g_h, g_w = cfg.region_grid
    slots = [(j, k) for j in range(video.frames) for k in range(g_h * g_w)]

    def run(slot):
        j, k = slot
        y0, x0, rh, rw = _region_rect(cfg, video.height, video.width, k)
        return _decode_region(cfg, video.samples[j, y0:y0 + rh, x0:x0 + rw, :], j, k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, slots))
    return [run(s) for s in slots]


# --- key sidecar -----------------------------------------------------------

def write_key(cfg, video_shape, stream):
    """Write the extraction key as key=value lines."""
    f, h, w, c = video_shape
    rh, rw = cfg.region_shape(h, w)
    ll_count = (rh // 2) * (rw // 2)
    lines = {
        "delta": repr(cfg.delta),
        "bit_depth": cfg.bit_depth,
        "patch_size": cfg.patch_size,
        "grid": f"{cfg.region_grid[0]}x{cfg.region_grid[1]}",
        "seed": cfg.seed,
        "k": cfg.code_bits,
        "r": cfg.replication(ll_count, 0),
        "total_patches": cfg.total_patches,
        "patch_grid": f"{cfg.patch_grid[0]}x{cfg.patch_grid[1]}",
        "wm_channels": cfg.wm_channels,
        "frames": f,
        "height": h,
        "width": w,
        "channels": c,
    }
    for key, value in lines.items():
        stream.write(f"{key}={value}\n")


def read_key(stream):
    """Parse a key sidecar; returns (QimConfig, expected video shape)."""
    fields = {}
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    try:
        grid = tuple(int(t) for t in fields["grid"].split("x"))
        patch_grid = tuple(int(t) for t in fields["patch_grid"].split("x"))
        cfg = QimConfig(
            delta=float(fields["delta"]),
            bit_depth=int(fields["bit_depth"]),
            patch_size=int(fields["patch_size"]),
            region_grid=grid,
            seed=int(fields["seed"]),
            total_patches=int(fields["total_patches"]),
            patch_grid=patch_grid,
            wm_channels=int(fields["wm_channels"]),
        )
        shape = (
            int(fields["frames"]), int(fields["height"]),
            int(fields["width"]), int(fields["channels"]),
        )
    except KeyError as exc:
        raise ValueError(f"key file missing field {exc}") from exc
    return cfg, shape
