"""Shared generators for natural-looking test content."""

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from vidmark.tensor_io import FrameSequence, WatermarkImage


def make_natural_video(frames, height, width, channels=3, seed=7, smooth=6.0):
    """Smooth seeded content with moderate contrast, mimicking real video."""
    rng = np.random.default_rng(seed)
    base = rng.normal(0.5, 0.35, size=(frames, height, width, channels))
    base = gaussian_filter(base, sigma=(0.8, smooth, smooth, 0))
    base = 0.5 + (base - base.mean()) * (0.25 / (base.std() + 1e-9))
    return FrameSequence(samples=np.clip(base, 0.0, 1.0))


def make_natural_logo(height, width, channels=3, seed=11):
    """Smooth background plus a hard-edged ring, logo-like."""
    rng = np.random.default_rng(seed)
    base = rng.normal(0.5, 0.4, size=(height, width, channels))
    base = gaussian_filter(base, sigma=(3.0, 3.0, 0))
    base = 0.5 + (base - base.mean()) * (0.3 / (base.std() + 1e-9))
    ys, xs = np.mgrid[0:height, 0:width]
    ring = np.sqrt((ys - height / 2) ** 2 + (xs - width / 2) ** 2)
    mask = ((ring > height * 0.2) & (ring < height * 0.35)).astype(float)
    accent = np.array([0.9, 0.2, 0.15])[:channels]
    base = base * (1 - mask[:, :, None]) + mask[:, :, None] * accent
    return WatermarkImage(samples=np.clip(base, 0.0, 1.0))


@pytest.fixture(scope="session")
def small_video():
    return make_natural_video(2, 64, 96, seed=5)


@pytest.fixture(scope="session")
def small_logo():
    return make_natural_logo(32, 32, seed=9)
