"""Bijective index orders for traversing mosaic-tiled wavelet layouts.

Every order is a precomputed permutation table over flattened tensor
indices together with its inverse, so gather/scatter round trips are
bit-exact.  Flattened indices are row-major: ``y*W + x`` for planes and
``f*H*W + y*W + x`` for volumes.
"""

from dataclasses import dataclass

import numpy as np

# Octant visit sequence for the 3D local scan, low to high frequency.
# Labels are (frame, height, width); L = first half, H = second half.
LOCAL_3D_FORWARD_OCTANTS = ("lll", "llh", "lhl", "hll", "lhh", "hlh", "hhl", "hhh")

QUADRANTS_2D = ("ll", "lh", "hl", "hh")


@dataclass(frozen=True)
class ScanOrder:
    """A permutation over [0, length) with its inverse.

    forward[step] = flat index visited at that step;
    inverse[flat index] = step at which it is visited.
    """

    length: int
    forward: np.ndarray
    inverse: np.ndarray

    def __post_init__(self):
        if self.forward.shape != (self.length,):
            raise ValueError("forward table length mismatch")
        if self.inverse.shape != (self.length,):
            raise ValueError("inverse table length mismatch")


def _make_order(forward):
    forward = np.asarray(forward, dtype=np.int64)
    inverse = np.empty_like(forward)
    inverse[forward] = np.arange(forward.size, dtype=np.int64)
    return ScanOrder(length=forward.size, forward=forward, inverse=inverse)


def scan_2d_freq(height, width):
    """Four-block frequency scan over a 2D mosaic layout.

    Visits the quadrants LL, LH, HL, HH in that order, row-major raster
    within each quadrant.
    """
    if height % 2 or width % 2:
        raise ValueError(f"dims must be even, got {height}x{width}")
    h2, w2 = height // 2, width // 2
    ys, xs = np.mgrid[0:h2, 0:w2]
    chunks = []
    for name in QUADRANTS_2D:
        y_off = h2 if name[0] == "h" else 0
        x_off = w2 if name[1] == "h" else 0
        chunks.append(((ys + y_off) * width + (xs + x_off)).ravel())
    return _make_order(np.concatenate(chunks))


def scan_3d_local(frames, height, width, direction="forward"):
    """Spatiotemporal local scan over a 3D mosaic layout.

    Octants are visited low-to-high frequency (LLL, LLH, LHL, HLL, LHH,
    HLH, HHL, HHH) for ``direction="forward"``; ``"reverse"`` visits the
    octants in the exactly reversed sequence.  Within each octant the
    scan is spatial-first: the full row-major raster of one frame slice
    completes before the next frame slice starts.  The intra-octant
    raster is ascending for both directions.
    """
    if direction not in ("forward", "reverse"):
        raise ValueError(f"direction must be forward or reverse, got {direction!r}")
    if frames % 2 or height % 2 or width % 2:
        raise ValueError(f"dims must be even, got {frames}x{height}x{width}")
    f2, h2, w2 = frames // 2, height // 2, width // 2
    octants = LOCAL_3D_FORWARD_OCTANTS
    if direction == "reverse":
        octants = tuple(reversed(octants))
    fs, ys, xs = np.mgrid[0:f2, 0:h2, 0:w2]
    chunks = []
    for name in octants:
        f_off = f2 if name[0] == "h" else 0
        y_off = h2 if name[1] == "h" else 0
        x_off = w2 if name[2] == "h" else 0
        flat = ((fs + f_off) * height + (ys + y_off)) * width + (xs + x_off)
        chunks.append(flat.ravel())
    return _make_order(np.concatenate(chunks))


def scan_3d_vanilla(frames, height, width):
    """Plain row-major scan over (frame, height, width)."""
    if frames < 1 or height < 1 or width < 1:
        raise ValueError("dims must be positive")
    return _make_order(np.arange(frames * height * width, dtype=np.int64))


def apply_order(seq, order, direction="gather"):
    """Reorder a flat sequence by a scan order.

    gather: out[step] = seq[forward[step]] (scan-ordered sequence).
    scatter: exact inverse of gather.
    """
    seq = np.asarray(seq)
    if seq.shape[0] != order.length:
        raise ValueError(f"sequence length {seq.shape[0]} != order length {order.length}")
    if direction == "gather":
        return seq[order.forward]
    if direction == "scatter":
        out = np.empty_like(seq)
        out[order.forward] = seq
        return out
    raise ValueError(f"direction must be gather or scatter, got {direction!r}")
