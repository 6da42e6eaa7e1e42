"""Single-level orthonormal Haar wavelet transforms in 2D and 3D.

Conventions used throughout:
  * analysis filters along an axis pair up samples (even, odd) and produce
    low  = (even + odd) / sqrt(2)
    high = (even - odd) / sqrt(2)
    which is orthonormal, so energy is preserved exactly and the inverse
    is the transpose.
  * subband labels follow axis order: 2D labels are (height, width), 3D
    labels are (frame, height, width).  "L" marks the low-pass output of
    that axis, "H" the high-pass output.
  * channels are transformed independently and ride along as the last axis.

The mosaic rearrangements tile the subbands back to the original
resolution (low halves first along each axis) so a single scan order can
traverse every frequency component.
"""

from dataclasses import dataclass

import numpy as np

_SQRT2 = np.sqrt(2.0)

BAND_ORDER_2D = ("ll", "lh", "hl", "hh")
BAND_ORDER_3D = ("lll", "llh", "lhl", "lhh", "hll", "hlh", "hhl", "hhh")


@dataclass(frozen=True)
class SubbandSet2D:
    """Four half-resolution planes; first label letter = height axis."""

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    def __post_init__(self):
        shapes = {b.shape for b in (self.ll, self.lh, self.hl, self.hh)}
        if len(shapes) != 1:
            raise ValueError(f"subband shapes differ: {shapes}")

    @property
    def band_shape(self):
        return self.ll.shape

    def bands(self):
        return (self.ll, self.lh, self.hl, self.hh)


@dataclass(frozen=True)
class SubbandSet3D:
    """Eight half-resolution volumes; label letters = (frame, height, width)."""

    lll: np.ndarray
    llh: np.ndarray
    lhl: np.ndarray
    lhh: np.ndarray
    hll: np.ndarray
    hlh: np.ndarray
    hhl: np.ndarray
    hhh: np.ndarray

    def __post_init__(self):
        shapes = {b.shape for b in self.bands()}
        if len(shapes) != 1:
            raise ValueError(f"subband shapes differ: {shapes}")

    @property
    def band_shape(self):
        return self.lll.shape

    def bands(self):
        return tuple(getattr(self, name) for name in BAND_ORDER_3D)


def _analyze(x, axis):
    """One Haar analysis step along `axis`; returns (low, high)."""
    n = x.shape[axis]
    if n % 2 != 0:
        raise ValueError(f"axis {axis} has odd length {n}; Haar needs even dims")
    even = [slice(None)] * x.ndim
    odd = [slice(None)] * x.ndim
    even[axis] = slice(0, None, 2)
    odd[axis] = slice(1, None, 2)
    a = x[tuple(even)]
    b = x[tuple(odd)]
    return (a + b) / _SQRT2, (a - b) / _SQRT2


def _synthesize(low, high, axis):
    """Inverse of :func:`_analyze`: interleave reconstructed samples."""
    if low.shape != high.shape:
        raise ValueError(f"band shapes differ: {low.shape} vs {high.shape}")
    a = (low + high) / _SQRT2
    b = (low - high) / _SQRT2
    shape = list(low.shape)
    shape[axis] *= 2
    out = np.empty(shape, dtype=np.result_type(low, high, np.float64))
    even = [slice(None)] * out.ndim
    odd = [slice(None)] * out.ndim
    even[axis] = slice(0, None, 2)
    odd[axis] = slice(1, None, 2)
    out[tuple(even)] = a
    out[tuple(odd)] = b
    return out


def dwt2(plane):
    """Single-level 2D Haar analysis of an H x W x C plane.

    H and W must be even.  Returns a :class:`SubbandSet2D` whose bands
    have shape (H/2, W/2, C).
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 3:
        raise ValueError(f"expected H x W x C plane, got shape {plane.shape}")
    low_h, high_h = _analyze(plane, axis=0)
    ll, lh = _analyze(low_h, axis=1)
    hl, hh = _analyze(high_h, axis=1)
    return SubbandSet2D(ll=ll, lh=lh, hl=hl, hh=hh)


def idwt2(bands):
    """Exact inverse of :func:`dwt2`."""
    low_h = _synthesize(bands.ll, bands.lh, axis=1)
    high_h = _synthesize(bands.hl, bands.hh, axis=1)
    return _synthesize(low_h, high_h, axis=0)


def dwt3(vol):
    """Single-level 3D Haar analysis of an F x H x W x C volume.

    Separable along frame, then height, then width.  F, H and W must be
    even.  Returns a :class:`SubbandSet3D` of (F/2, H/2, W/2, C) volumes.
    """
    vol = np.asarray(vol, dtype=np.float64)
    if vol.ndim != 4:
        raise ValueError(f"expected F x H x W x C volume, got shape {vol.shape}")
    low_f, high_f = _analyze(vol, axis=0)
    out = {}
    for f_label, f_half in (("l", low_f), ("h", high_f)):
        low_h, high_h = _analyze(f_half, axis=1)
        for h_label, h_half in (("l", low_h), ("h", high_h)):
            low_w, high_w = _analyze(h_half, axis=2)
            out[f_label + h_label + "l"] = low_w
            out[f_label + h_label + "h"] = high_w
    return SubbandSet3D(**out)


def idwt3(bands):
    """Exact inverse of :func:`dwt3`."""
    halves_f = []
    for f_label in "lh":
        halves_h = []
        for h_label in "lh":
            low_w = getattr(bands, f_label + h_label + "l")
            high_w = getattr(bands, f_label + h_label + "h")
            halves_h.append(_synthesize(low_w, high_w, axis=2))
        halves_f.append(_synthesize(halves_h[0], halves_h[1], axis=1))
    return _synthesize(halves_f[0], halves_f[1], axis=0)


def mosaic2_forward(bands):
    """Tile 2D subbands into one full-resolution plane.

    LL goes top-left, LH top-right, HL bottom-left, HH bottom-right
    (low half of each axis first).  Lossless index permutation.
    """
    top = np.concatenate([bands.ll, bands.lh], axis=1)
    bottom = np.concatenate([bands.hl, bands.hh], axis=1)
    return np.concatenate([top, bottom], axis=0)


def mosaic2_inverse(plane):
    """Split a mosaic plane back into :class:`SubbandSet2D`, exactly."""
    plane = np.asarray(plane)
    h, w = plane.shape[0], plane.shape[1]
    if h % 2 != 0 or w % 2 != 0:
        raise ValueError(f"mosaic plane dims must be even, got {h}x{w}")
    h2, w2 = h // 2, w // 2
    return SubbandSet2D(
        ll=plane[:h2, :w2].copy(),
        lh=plane[:h2, w2:].copy(),
        hl=plane[h2:, :w2].copy(),
        hh=plane[h2:, w2:].copy(),
    )


def mosaic3_forward(bands):
    """Tile 3D subbands into one full-resolution volume.

    Each subband occupies the octant whose (frame, height, width) halves
    match its label letters (L = first half, H = second half).
    """
    f2, h2, w2 = bands.band_shape[0], bands.band_shape[1], bands.band_shape[2]
    shape = (2 * f2, 2 * h2, 2 * w2) + bands.lll.shape[3:]
    out = np.empty(shape, dtype=bands.lll.dtype)
    for name in BAND_ORDER_3D:
        f_off = f2 if name[0] == "h" else 0
        h_off = h2 if name[1] == "h" else 0
        w_off = w2 if name[2] == "h" else 0
        out[f_off:f_off + f2, h_off:h_off + h2, w_off:w_off + w2] = getattr(bands, name)
    return out


def mosaic3_inverse(vol):
    """Split a mosaic volume back into :class:`SubbandSet3D`, exactly."""
    vol = np.asarray(vol)
    f, h, w = vol.shape[0], vol.shape[1], vol.shape[2]
    if f % 2 or h % 2 or w % 2:
        raise ValueError(f"mosaic volume dims must be even, got {f}x{h}x{w}")
    f2, h2, w2 = f // 2, h // 2, w // 2
    parts = {}
    for name in BAND_ORDER_3D:
        f_off = f2 if name[0] == "h" else 0
        h_off = h2 if name[1] == "h" else 0
        w_off = w2 if name[2] == "h" else 0
        parts[name] = vol[f_off:f_off + f2, h_off:h_off + h2, w_off:w_off + w2].copy()
    return SubbandSet3D(**parts)
