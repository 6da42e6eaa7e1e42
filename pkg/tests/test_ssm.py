"""Selective scan vs naive recurrence oracle; SFMamba block wiring."""

import numpy as np
import pytest

from vidmark import ssm
from vidmark.ssm import (
    ScanProjection,
    SfMamba2d,
    SfMamba3d,
    SsmParams,
    identity_params,
    input_projection,
    selective_scan,
)


def naive_scan_oracle(x, params):
    """Step-by-step recurrence, written independently of the kernel."""
    length, channels = x.shape
    state = params.a_bar.shape[2]
    y = np.zeros((length, channels))
    for d in range(channels):
        h = [0.0] * state
        for t in range(length):
            acc = 0.0
            for n in range(state):
                h[n] = params.a_bar[t, d, n] * h[n] + params.b_bar[t, d, n] * x[t, d]
                acc += params.c[t, n] * h[n]
            y[t, d] = acc + params.d_skip[d] * x[t, d]
    return y


def random_params(rng, length, channels, state):
    return SsmParams(
        a_bar=rng.uniform(0.0, 1.0, (length, channels, state)),
        b_bar=rng.normal(size=(length, channels, state)),
        c=rng.normal(size=(length, state)),
        d_skip=rng.normal(size=channels),
    )


class TestSelectiveScan:
    def test_zero_transition_is_memoryless(self):
        rng = np.random.default_rng(0)
        length, channels, state = 16, 3, 4
        params = random_params(rng, length, channels, state)
        params = SsmParams(
            a_bar=np.zeros_like(params.a_bar), b_bar=params.b_bar,
            c=params.c, d_skip=params.d_skip,
        )
        x = rng.normal(size=(length, channels))
        y = selective_scan(x, params)
        expected = np.einsum(
            "tdn,tn->td", params.b_bar * x[:, :, None], params.c
        ) + params.d_skip * x
        assert np.max(np.abs(y - expected)) < 1e-10

    def test_zero_input_zero_output(self):
        rng = np.random.default_rng(1)
        params = random_params(rng, 8, 2, 3)
        assert np.all(selective_scan(np.zeros((8, 2)), params) == 0.0)

    def test_matches_oracle(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(64, 4))
        params = random_params(rng, 64, 4, 8)
        y = selective_scan(x, params)
        assert np.max(np.abs(y - naive_scan_oracle(x, params))) < 1e-5

    def test_fixed_params_linearity(self):
        rng = np.random.default_rng(3)
        length, channels, state = 32, 3, 5
        params = random_params(rng, length, channels, state)
        x = rng.normal(size=(length, channels))
        y = rng.normal(size=(length, channels))
        a, b = 0.7, -1.9
        combined = selective_scan(a * x + b * y, params)
        separate = a * selective_scan(x, params) + b * selective_scan(y, params)
        assert np.max(np.abs(combined - separate)) < 1e-5

    def test_identity_params(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(10, 3))
        assert np.allclose(selective_scan(x, identity_params(10, 3)), x)

    def test_rejects_nonfinite(self):
        params = identity_params(4, 2)
        x = np.zeros((4, 2))
        x[1, 1] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            selective_scan(x, params)

    def test_rejects_dim_mismatch(self):
        with pytest.raises(ValueError):
            selective_scan(np.zeros((5, 2)), identity_params(4, 2))

    def test_unstable_a_bar_rejected(self):
        with pytest.raises(ValueError, match="unstable"):
            SsmParams(
                a_bar=np.full((2, 1, 1), 1.5), b_bar=np.ones((2, 1, 1)),
                c=np.ones((2, 1)), d_skip=np.zeros(1),
            )


class TestInputProjection:
    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(12, 4))
        p1 = input_projection(x, ScanProjection(4, 6, seed=42))
        p2 = input_projection(x, ScanProjection(4, 6, seed=42))
        assert np.array_equal(p1.a_bar, p2.a_bar)
        assert np.array_equal(p1.b_bar, p2.b_bar)
        assert np.array_equal(p1.c, p2.c)

    def test_a_bar_in_unit_interval(self):
        rng = np.random.default_rng(6)
        x = rng.normal(scale=3.0, size=(50, 4))
        params = input_projection(x, ScanProjection(4, 8, seed=0))
        assert params.a_bar.min() > 0.0
        assert params.a_bar.max() <= 1.0

    def test_pointwise_locality(self):
        rng = np.random.default_rng(7)
        x1 = rng.normal(size=(20, 3))
        x2 = x1.copy()
        t_star = 13
        x2[t_star] += 1.0
        proj = ScanProjection(3, 4, seed=1)
        p1 = input_projection(x1, proj)
        p2 = input_projection(x2, proj)
        assert np.array_equal(p1.a_bar[:t_star], p2.a_bar[:t_star])
        assert np.array_equal(p1.b_bar[:t_star], p2.b_bar[:t_star])
        assert not np.array_equal(p1.a_bar[t_star], p2.a_bar[t_star])


class TestSfMamba2d:
    def test_zero_input_zero_output(self):
        block = SfMamba2d(channels=4, seed=0)
        out = block.forward(np.zeros((8, 8, 4)))
        assert np.all(out == 0.0)

    def test_shape_preserved(self):
        rng = np.random.default_rng(8)
        block = SfMamba2d(channels=8, seed=1)
        x = rng.uniform(-3, 3, size=(32, 32, 8))
        out = block.forward(x)
        assert out.shape == x.shape
        assert np.all(np.isfinite(out))

    def test_identity_ssm_reduces_frequency_branch_to_gating(self):
        rng = np.random.default_rng(9)
        block = SfMamba2d(channels=4, seed=2)
        block.freq_params_fn = lambda seq: identity_params(len(seq), 4)
        x = rng.normal(size=(16, 16, 4))
        f_n = ssm.layer_norm(x)
        got = block.frequency_branch(f_n)
        assert np.max(np.abs(got - ssm.silu(f_n) * f_n)) < 1e-5

    def test_zeroed_frequency_weights_isolate_spatial_path(self):
        rng = np.random.default_rng(10)
        block = SfMamba2d(channels=4, seed=3)
        block.freq_proj.w_c[:] = 0.0
        block.freq_proj.d_skip[:] = 0.0
        x = rng.normal(size=(8, 8, 4))
        out = block.forward(x)
        f_n = ssm.layer_norm(x)
        spatial = block.spatial_branch(f_n, x)
        reference = np.concatenate([spatial, np.zeros_like(spatial)], axis=-1) @ block.conv_out
        assert np.max(np.abs(out - reference)) < 1e-10

    def test_odd_dims_rejected(self):
        with pytest.raises(ValueError):
            SfMamba2d(channels=2, seed=0).forward(np.zeros((7, 8, 2)))


class TestSfMamba3d:
    def test_shape_preserved(self):
        rng = np.random.default_rng(11)
        block = SfMamba3d(channels=4, seed=4)
        x = rng.uniform(-3, 3, size=(2, 16, 16, 4))
        out = block.forward(x)
        assert out.shape == x.shape
        assert np.all(np.isfinite(out))

    def test_directions_differ(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(2, 8, 8, 4))
        fwd = SfMamba3d(channels=4, seed=5, directions=("forward",)).forward(x)
        rev = SfMamba3d(channels=4, seed=5, directions=("reverse",)).forward(x)
        assert not np.allclose(fwd, rev)

    def test_identity_ssm_reduces_frequency_branch_to_gating(self):
        rng = np.random.default_rng(13)
        block = SfMamba3d(channels=3, seed=6, directions=("forward",))
        block.freq_params_fns["forward"] = lambda seq: identity_params(len(seq), 3)
        x = rng.normal(size=(4, 8, 8, 3))
        f_n = ssm.layer_norm(x)
        got = block.frequency_branch(f_n)
        assert np.max(np.abs(got - ssm.silu(f_n) * f_n)) < 1e-5

    def test_determinism(self):
        rng = np.random.default_rng(14)
        x = rng.normal(size=(2, 8, 8, 4))
        a = SfMamba3d(channels=4, seed=7).forward(x)
        b = SfMamba3d(channels=4, seed=7).forward(x)
        assert np.array_equal(a, b)

    def test_demo_stacks(self):
        rng = np.random.default_rng(15)
        x = rng.normal(size=(2, 8, 8, 4))
        embed_stack = ssm.demo_embed_stack(4, seed=0)
        extract_stack = ssm.demo_extract_stack(4, seed=0)
        assert len(embed_stack) == 2
        assert len(extract_stack) == 4
        out = ssm.run_stack(embed_stack, x)
        assert out.shape == x.shape
        out = ssm.run_stack(extract_stack, x)
        assert out.shape == x.shape
        assert np.all(np.isfinite(out))
