"""
Unit tests for image quality metrics.
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from core.data import image_metrics, l1, psnr, ssim
from core.errors import ContractError, DimensionError


@pytest.fixture
def image():
    return np.random.default_rng(0).uniform(0.0, 0.9, (32, 32, 3))


class TestMetrics:
    """Test suite for PSNR, SSIM and L1."""

    def test_identical_images(self, image):
        """Test the capped PSNR, unit SSIM and zero L1."""
        assert psnr(image, image) == 99.0
        assert ssim(image, image) == pytest.approx(1.0)
        assert l1(image, image) == 0.0

    def test_constant_offset(self, image):
        """Test 20 dB and an L1 of 0.1 for a 0.1 offset."""
        assert psnr(image + 0.1, image) == pytest.approx(20.0, abs=1e-6)
        assert l1(image + 0.1, image) == pytest.approx(0.1)

    def test_ssim_drops_with_noise(self, image):
        """Test that noise lowers SSIM below one."""
        noisy = np.clip(image + np.random.default_rng(1).normal(0, 0.2, image.shape), 0, 1)
        assert ssim(noisy, image) < 0.9

    def test_ssim_small_image(self):
        """Test that images smaller than the window are refused."""
        with pytest.raises(ContractError, match="window"):
            ssim(np.zeros((8, 8, 3)), np.zeros((8, 8, 3)))

    def test_shape_mismatch(self, image):
        """Test that differently sized images raise DimensionError."""
        with pytest.raises(DimensionError):
            psnr(image, image[:16])

    def test_image_metrics(self, image):
        """Test the combined dictionary."""
        metrics = image_metrics(image, image)
        assert set(metrics) == {"psnr", "ssim", "l1"}

    def test_psnr_is_symmetric(self, image):
        """Test that swapping the arguments leaves PSNR unchanged."""
        other = np.random.default_rng(2).uniform(0.0, 1.0, image.shape)
        assert psnr(image, other) == pytest.approx(psnr(other, image), abs=1e-12)

    def test_psnr_falls_as_noise_grows(self, image):
        """Test that scaling up a fixed noise pattern strictly lowers PSNR."""
        noise = np.random.default_rng(3).normal(0.0, 1.0, image.shape)
        values = [psnr(image + scale * noise, image) for scale in (0.001, 0.01, 0.05, 0.1, 0.3)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_ssim_of_inverted_image_is_negative(self, image):
        """Test that a ↦ 1 − a scores below zero, as a windowed reference does."""
        inverted = 1.0 - image
        value = ssim(image, inverted)
        assert value < 0.0
        assert value == pytest.approx(_windowed_ssim(image.mean(axis=2), inverted.mean(axis=2)), abs=1e-6)


def _windowed_ssim(x: np.ndarray, y: np.ndarray, size: int = 11, sigma: float = 1.5) -> float:
    """Mean SSIM over every full 11x11 Gaussian window, one window at a time."""
    offsets = np.arange(size) - size // 2
    kernel = np.exp(-(offsets[:, None] ** 2 + offsets[None, :] ** 2) / (2.0 * sigma**2))
    kernel /= kernel.sum()
    c1, c2 = 0.01**2, 0.03**2
    scores = []
    for i in range(x.shape[0] - size + 1):
        for j in range(x.shape[1] - size + 1):
            wx, wy = x[i : i + size, j : j + size], y[i : i + size, j : j + size]
            mx, my = (kernel * wx).sum(), (kernel * wy).sum()
            vx = (kernel * wx * wx).sum() - mx * mx
            vy = (kernel * wy * wy).sum() - my * my
            cxy = (kernel * wx * wy).sum() - mx * my
            scores.append(
                (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2))
            )
    return float(np.mean(scores))
