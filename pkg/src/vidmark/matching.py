"""Coarse-to-fine adaptive patch matching.

The watermark is tiled into patches; each patch is routed to the most
visually similar frame (coarse stage, capacity-limited) and then to the
most similar spatial region inside that frame (fine stage).  Similarity
is the dot product of features from a single seeded 3x3 convolution +
ReLU + global average pooling, computed on the patch and on an 8x8
average-pooled proxy of the frame, and normalized per patch with a
softmax.  Greedy resolution order is descending best score so confident
matches win conflicts; all tie-breaks go to the lower index, which makes
the whole plan deterministic for a fixed seed.
"""

from dataclasses import dataclass

import numpy as np

from .tensor_io import FrameSequence, WatermarkImage

FEATURE_DIM = 16
POOL_FACTOR = 8


@dataclass(frozen=True)
class PatchSet:
    """Row-major tiling of a watermark into patch_size^2 tiles."""

    patch_size: int
    patches: np.ndarray  # (P, ps, ps, C)
    grid: tuple  # (rows, cols) of the patch layout

    @property
    def count(self):
        return self.patches.shape[0]


@dataclass(frozen=True)
class Assignment:
    patch: int
    frame: int
    region: int


@dataclass(frozen=True)
class AssignmentPlan:
    """Patch -> (frame, region) mapping with frame capacity respected.

    Each patch appears exactly once, each (frame, region) slot hosts at
    most one patch, and no frame exceeds cap = ceil(P / F) patches.
    """

    assignments: tuple
    capacity: int
    region_grid: tuple  # (g_h, g_w), g_h * g_w == capacity
    patch_grid: tuple  # (rows, cols) of the watermark patch layout
    patch_size: int

    def validate(self, frames):
        seen_patches = set()
        seen_slots = set()
        per_frame = {}
        for a in self.assignments:
            if a.patch in seen_patches:
                raise ValueError(f"patch {a.patch} assigned twice")
            seen_patches.add(a.patch)
            slot = (a.frame, a.region)
            if slot in seen_slots:
                raise ValueError(f"slot {slot} hosts two patches")
            seen_slots.add(slot)
            if not 0 <= a.frame < frames:
                raise ValueError(f"frame {a.frame} out of range")
            if not 0 <= a.region < self.capacity:
                raise ValueError(f"region {a.region} out of range")
            per_frame[a.frame] = per_frame.get(a.frame, 0) + 1
        if per_frame and max(per_frame.values()) > self.capacity:
            raise ValueError("frame capacity exceeded")


def partition(wm, patch_size=16):
    """Split a watermark into row-major patches, losslessly."""
    h, w, c = wm.samples.shape
    if h % patch_size or w % patch_size:
        raise ValueError(f"dims {h}x{w} not divisible by patch size {patch_size}")
    rows, cols = h // patch_size, w // patch_size
    tiles = (
        wm.samples.reshape(rows, patch_size, cols, patch_size, c)
        .swapaxes(1, 2)
        .reshape(rows * cols, patch_size, patch_size, c)
    )
    return PatchSet(patch_size=patch_size, patches=tiles, grid=(rows, cols))


def reassemble(patches):
    """Inverse of :func:`partition`."""
    rows, cols = patches.grid
    ps = patches.patch_size
    c = patches.patches.shape[3]
    return WatermarkImage(
        samples=patches.patches.reshape(rows, cols, ps, ps, c)
        .swapaxes(1, 2)
        .reshape(rows * ps, cols * ps, c)
    )


def proxy_latent(frame):
    """8x8 average pooling of one frame, the stand-in for a VAE latent."""
    h, w, c = frame.shape
    if h % POOL_FACTOR or w % POOL_FACTOR:
        raise ValueError(f"frame dims {h}x{w} not divisible by {POOL_FACTOR}")
    return frame.reshape(
        h // POOL_FACTOR, POOL_FACTOR, w // POOL_FACTOR, POOL_FACTOR, c
    ).mean(axis=(1, 3))


def proxy_latents(video):
    return [proxy_latent(video.samples[j]) for j in range(video.frames)]


def conv_weights(in_channels, seed, dim=FEATURE_DIM):
    """Seeded 3x3 convolution kernel (3, 3, in_channels, dim), zero bias."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), in_channels]))
    return rng.uniform(-0.1, 0.1, size=(3, 3, in_channels, dim))


def extract_features(x, seed, dim=FEATURE_DIM):
    """Valid 3x3 convolution -> ReLU -> global average pool."""
    x = np.asarray(x, dtype=np.float64)
    h, w, c = x.shape
    if h < 3 or w < 3:
        raise ValueError(f"input {h}x{w} too small for a 3x3 convolution")
    kernel = conv_weights(c, seed, dim)
    windows = np.lib.stride_tricks.sliding_window_view(x, (3, 3), axis=(0, 1))
    # windows: (h-2, w-2, c, 3, 3); kernel: (3, 3, c, dim)
    conv = np.einsum("yxcij,ijcd->yxd", windows, kernel)
    return np.maximum(conv, 0.0).mean(axis=(0, 1))


def region_grid(capacity):
    """Near-square factorization (g_h, g_w) of capacity with g_h <= g_w."""
    if capacity < 1:
        raise ValueError("capacity must be positive")
    g_h = int(np.sqrt(capacity))
    while capacity % g_h:
        g_h -= 1
    return (g_h, capacity // g_h)


def split_regions(latent, grid):
    """Equal tiling of a latent into grid (g_h, g_w) regions, row-major."""
    g_h, g_w = grid
    h, w, c = latent.shape
    if h % g_h or w % g_w:
        raise ValueError(f"latent {h}x{w} not divisible by grid {grid}")
    rh, rw = h // g_h, w // g_w
    return [
        latent[r * rh:(r + 1) * rh, q * rw:(q + 1) * rw]
        for r in range(g_h)
        for q in range(g_w)
    ]


def _greedy_assign(scores, capacities):
    """Greedy argmax assignment under per-target capacities.

    Items are processed in descending order of their best score (ties to
    the lower item index); each takes its best-scoring target with
    remaining capacity (ties to the lower target index).
    """
    n_items, n_targets = scores.shape
    order = sorted(range(n_items), key=lambda i: (-scores[i].max(), i))
    remaining = list(capacities)
    choice = np.empty(n_items, dtype=np.int64)
    for i in order:
        best_t, best_s = -1, None
        for t in range(n_targets):
            if remaining[t] <= 0:
                continue
            if best_s is None or scores[i, t] > best_s:
                best_t, best_s = t, scores[i, t]
        if best_t < 0:
            raise ValueError("no target with remaining capacity")
        choice[i] = best_t
        remaining[best_t] -= 1
    return choice


def _softmax(scores):
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def coarse_assign(patches, latents, seed):
    """Route each patch to a frame under capacity cap = ceil(P / F).

    Returns (frame_choice, weights) where weights[i, j] is the softmax
    similarity of patch i to frame j (rows sum to 1).
    """
    n_patches = patches.count
    n_frames = len(latents)
    if n_frames < 1 or n_patches < 1:
        raise ValueError("need at least one patch and one frame")
    cap = -(-n_patches // n_frames)
    pf = np.stack([extract_features(p, seed) for p in patches.patches])
    zf = np.stack([extract_features(z, seed) for z in latents])
    scores = pf @ zf.T
    choice = _greedy_assign(scores, [cap] * n_frames)
    return choice, _softmax(scores)


def fine_assign(frame_patches, latent, grid, seed):
    """Route a frame's patches to regions of its latent, one per region.

    `frame_patches` is a sequence of (patch index, tile) pairs.  Returns
    (region_choice, weights) aligned with the input sequence.
    """
    n = len(frame_patches)
    regions = split_regions(latent, grid)
    if n > len(regions):
        raise ValueError(f"{n} patches exceed {len(regions)} regions")
    if n == 0:
        return np.empty(0, dtype=np.int64), np.empty((0, len(regions)))
    pf = np.stack([extract_features(tile, seed) for _, tile in frame_patches])
    rf = np.stack([extract_features(r, seed) for r in regions])
    scores = pf @ rf.T
    choice = _greedy_assign(scores, [1] * len(regions))
    return choice, _softmax(scores)


def plan(wm, video, patch_size=16, seed=0):
    """Full coarse-to-fine plan for embedding `wm` into `video`."""
    patches = partition(wm, patch_size)
    cap = -(-patches.count // video.frames)
    grid = region_grid(cap)
    latents = proxy_latents(video)
    if latents[0].shape[0] % grid[0] or latents[0].shape[1] % grid[1]:
        raise ValueError(
            f"latent {latents[0].shape[:2]} not divisible by region grid {grid}"
        )
    frame_choice, _ = coarse_assign(patches, latents, seed)
    assignments = []
    for j in range(video.frames):
        members = [(i, patches.patches[i]) for i in range(patches.count) if frame_choice[i] == j]
        region_choice, _ = fine_assign(members, latents[j], grid, seed)
        for (i, _), k in zip(members, region_choice):
            assignments.append(Assignment(patch=i, frame=j, region=int(k)))
    assignments.sort(key=lambda a: a.patch)
    result = AssignmentPlan(
        assignments=tuple(assignments),
        capacity=cap,
        region_grid=grid,
        patch_grid=patches.grid,
        patch_size=patch_size,
    )
    result.validate(video.frames)
    return result


def dump_plan(plan_, stream):
    """One line per patch: `i j k`."""
    for a in plan_.assignments:
        stream.write(f"{a.patch} {a.frame} {a.region}\n")


def parse_plan(stream, capacity, region_grid, patch_grid, patch_size):
    assignments = []
    for line in stream:
        line = line.strip()
        if not line:
            continue
        i, j, k = (int(tok) for tok in line.split())
        assignments.append(Assignment(patch=i, frame=j, region=k))
    assignments.sort(key=lambda a: a.patch)
    return AssignmentPlan(
        assignments=tuple(assignments),
        capacity=capacity,
        region_grid=region_grid,
        patch_grid=patch_grid,
        patch_size=patch_size,
    )
