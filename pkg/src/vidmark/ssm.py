"""Selective state-space scan kernel and forward-only SFMamba blocks.

The kernel runs the discretized input-gated recurrence

    h_t = a_bar_t * h_{t-1} + b_bar_t * x_t        (elementwise, per channel)
    y_t = h_t . c_t + d_skip * x_t

with h_0 = 0.  Parameters are input-dependent: a pointwise projection of
the sequence produces a positive step size, and a_bar = exp(-step *
a_base) keeps every transition gate in (0, 1].

The SFMamba blocks wire LayerNorm, SiLU gating, a spatial scan branch
and a wavelet frequency branch (DWT -> mosaic -> frequency-ordered scan
-> inverse) into a shape-preserving map.  Weights are seeded, not
trained; the blocks exist to verify wiring, scan orders, and kernel
behavior, and to benchmark.
"""

from dataclasses import dataclass

import numpy as np

from . import scanning, wavelet

LAYERNORM_EPS = 1e-5
WEIGHT_SCALE = 0.1


@dataclass(frozen=True)
class SsmParams:
    """Per-step discretized SSM parameters for an L x D sequence."""

    a_bar: np.ndarray  # (L, D, N), entries in (0, 1]
    b_bar: np.ndarray  # (L, D, N)
    c: np.ndarray  # (L, N), shared across channels per step
    d_skip: np.ndarray  # (D,)

    def __post_init__(self):
        l, d, n = self.a_bar.shape
        if self.b_bar.shape != (l, d, n):
            raise ValueError(f"b_bar shape {self.b_bar.shape} != {(l, d, n)}")
        if self.c.shape != (l, n):
            raise ValueError(f"c shape {self.c.shape} != {(l, n)}")
        if self.d_skip.shape != (d,):
            raise ValueError(f"d_skip shape {self.d_skip.shape} != {(d,)}")
        if np.abs(self.a_bar).max() > 1.0 + 1e-12:
            raise ValueError("unstable transition: |a_bar| > 1")


def selective_scan(x, params):
    """Run the sequential recurrence over an L x D sequence."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected L x D sequence, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    l, d = x.shape
    if params.a_bar.shape[0] != l or params.a_bar.shape[1] != d:
        raise ValueError(
            f"params sized {params.a_bar.shape[:2]} for input {(l, d)}"
        )
    n = params.a_bar.shape[2]
    h = np.zeros((d, n))
    y = np.empty((l, d))
    for t in range(l):
        h = params.a_bar[t] * h + params.b_bar[t] * x[t][:, None]
        y[t] = h @ params.c[t] + params.d_skip * x[t]
    return y


def identity_params(length, channels):
    """a_bar=0, b_bar=1, c=1 (N=1), d_skip=0: the scan becomes y = x."""
    return SsmParams(
        a_bar=np.zeros((length, channels, 1)),
        b_bar=np.ones((length, channels, 1)),
        c=np.ones((length, 1)),
        d_skip=np.zeros(channels),
    )


def _softplus(z):
    return np.logaddexp(0.0, z)


class ScanProjection:
    """Seeded pointwise projections producing input-dependent parameters."""

    def __init__(self, channels, state_dim, seed):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0x7FFFFFFF, 0xA]))
        self.channels = channels
        self.state_dim = state_dim
        self.w_step = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, (channels, channels))
        self.w_b = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, (channels, state_dim))
        self.w_c = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, (channels, state_dim))
        self.d_skip = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, channels)
        self.a_base = np.arange(1, state_dim + 1, dtype=np.float64)


def input_projection(x, proj):
    """Input-dependent SSM parameters; pointwise, so a change at step t
    cannot alter parameters at earlier steps."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != proj.channels:
        raise ValueError(f"expected L x {proj.channels} input, got {x.shape}")
    step = _softplus(x @ proj.w_step)  # (L, D), strictly positive
    a_bar = np.exp(-step[:, :, None] * proj.a_base[None, None, :])
    b_bar = step[:, :, None] * (x @ proj.w_b)[:, None, :]
    c = x @ proj.w_c
    return SsmParams(a_bar=a_bar, b_bar=b_bar, c=c, d_skip=proj.d_skip)


def layer_norm(x, eps=LAYERNORM_EPS):
    """Normalize over the trailing channel dimension (gamma=1, beta=0)."""
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps)


def silu(x):
    return x / (1.0 + np.exp(-x))


def _check_finite(x, where):
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite values after {where}")


class SfMamba2d:
    """Dual-branch 2D block: gated spatial scan + gated wavelet-domain scan.

    Input and output are (H, W, D) feature maps with even H, W.
    """

    def __init__(self, channels, state_dim=8, seed=0):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0x7FFFFFFF, 0x2D]))
        self.channels = channels
        self.conv_in = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, (channels, channels))
        self.conv_out = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, (2 * channels, channels))
        self.spatial_proj = ScanProjection(channels, state_dim, seed=seed * 7 + 1)
        self.freq_proj = ScanProjection(channels, state_dim, seed=seed * 7 + 2)
        self.freq_params_fn = lambda seq: input_projection(seq, self.freq_proj)
        self.spatial_params_fn = lambda seq: input_projection(seq, self.spatial_proj)

    def spatial_branch(self, f_n, f_in):
        h, w, d = f_n.shape
        seq = (f_n.reshape(-1, d) @ self.conv_in)
        out = selective_scan(seq, self.spatial_params_fn(seq))
        return silu(f_n) * out.reshape(h, w, d) + f_in

    def frequency_branch(self, f_n):
        h, w, d = f_n.shape
        mosaic = wavelet.mosaic2_forward(wavelet.dwt2(f_n))
        order = scanning.scan_2d_freq(h, w)
        seq = scanning.apply_order(mosaic.reshape(-1, d), order, "gather")
        out = selective_scan(seq, self.freq_params_fn(seq))
        back = scanning.apply_order(out, order, "scatter").reshape(h, w, d)
        return silu(f_n) * wavelet.idwt2(wavelet.mosaic2_inverse(back))

    def forward(self, f_in):
        f_in = np.asarray(f_in, dtype=np.float64)
        if f_in.ndim != 3:
            raise ValueError(f"expected (H, W, D) input, got shape {f_in.shape}")
        if f_in.shape[0] % 2 or f_in.shape[1] % 2:
            raise ValueError(f"spatial dims must be even, got {f_in.shape[:2]}")
        _check_finite(f_in, "input")
        f_n = layer_norm(f_in)
        spatial = self.spatial_branch(f_n, f_in)
        freq = self.frequency_branch(f_n)
        out = np.concatenate([spatial, freq], axis=-1) @ self.conv_out
        _check_finite(out, "2D block output")
        return out


class SfMamba3d:
    """Dual-branch 3D block over (F, H, W, D) volumes.

    The frequency branch scans the 3D wavelet mosaic in the configured
    directions (low-to-high and/or its exact reversal) and sums the
    direction outputs before gating; the spatial branch uses the plain
    raster order.
    """

    def __init__(self, channels, state_dim=8, seed=0, directions=("forward", "reverse")):
        if not directions or any(d not in ("forward", "reverse") for d in directions):
            raise ValueError(f"bad direction set {directions!r}")
        rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0x7FFFFFFF, 0x3D]))
        self.channels = channels
        self.directions = tuple(directions)
        self.conv_in = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, (channels, channels))
        self.conv_out = rng.uniform(-WEIGHT_SCALE, WEIGHT_SCALE, (2 * channels, channels))
        self.spatial_proj = ScanProjection(channels, state_dim, seed=seed * 7 + 3)
        self.freq_projs = {
            direction: ScanProjection(channels, state_dim, seed=seed * 7 + 4 + i)
            for i, direction in enumerate(self.directions)
        }
        self.spatial_params_fn = lambda seq: input_projection(seq, self.spatial_proj)
        self.freq_params_fns = {
            direction: (lambda seq, p=proj: input_projection(seq, p))
            for direction, proj in self.freq_projs.items()
        }

    def spatial_branch(self, f_n, f_in):
        f, h, w, d = f_n.shape
        order = scanning.scan_3d_vanilla(f, h, w)
        seq = scanning.apply_order((f_n.reshape(-1, d) @ self.conv_in), order, "gather")
        out = selective_scan(seq, self.spatial_params_fn(seq))
        back = scanning.apply_order(out, order, "scatter").reshape(f, h, w, d)
        return silu(f_n) * back + f_in

    def frequency_branch(self, f_n):
        f, h, w, d = f_n.shape
        mosaic = wavelet.mosaic3_forward(wavelet.dwt3(f_n))
        flat = mosaic.reshape(-1, d)
        total = np.zeros_like(flat)
        for direction in self.directions:
            order = scanning.scan_3d_local(f, h, w, direction)
            seq = scanning.apply_order(flat, order, "gather")
            out = selective_scan(seq, self.freq_params_fns[direction](seq))
            total += scanning.apply_order(out, order, "scatter")
        back = total.reshape(f, h, w, d)
        return silu(f_n) * wavelet.idwt3(wavelet.mosaic3_inverse(back))

    def forward(self, f_in):
        f_in = np.asarray(f_in, dtype=np.float64)
        if f_in.ndim != 4:
            raise ValueError(f"expected (F, H, W, D) input, got shape {f_in.shape}")
        if f_in.shape[0] % 2 or f_in.shape[1] % 2 or f_in.shape[2] % 2:
            raise ValueError(f"F, H, W must be even, got {f_in.shape[:3]}")
        _check_finite(f_in, "input")
        f_n = layer_norm(f_in)
        spatial = self.spatial_branch(f_n, f_in)
        freq = self.frequency_branch(f_n)
        out = np.concatenate([spatial, freq], axis=-1) @ self.conv_out
        _check_finite(out, "3D block output")
        return out


# Demo network depths: 2 blocks on the embed side, 4 on the extract side.
EMBED_STACK_DEPTH = 2
EXTRACT_STACK_DEPTH = 4


def demo_embed_stack(channels, state_dim=8, seed=0):
    return [SfMamba3d(channels, state_dim, seed=seed + i) for i in range(EMBED_STACK_DEPTH)]


def demo_extract_stack(channels, state_dim=8, seed=0):
    return [SfMamba3d(channels, state_dim, seed=seed + i) for i in range(EXTRACT_STACK_DEPTH)]


def run_stack(blocks, f_in):
    out = f_in
    for block in blocks:
        out = block.forward(out)
    return out
