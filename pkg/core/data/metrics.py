"""
Image Quality Metrics

PSNR, SSIM and mean absolute error for images in [0, 1], computed in
64-bit precision over the full frame.
"""

import numpy as np
from skimage.metrics import mean_squared_error, peak_signal_noise_ratio, structural_similarity

from core.errors import ContractError, DimensionError

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def _pair(a: np.ndarray, b: np.ndarray, op: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(op, a.shape, b.shape)
    return a, b


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """``10·log10(1 / MSE)`` in dB, capped at 99 dB for identical images."""
    a, b = _pair(a, b, "psnr")
    if mean_squared_error(a, b) == 0.0:
        return PSNR_CAP
    return min(float(peak_signal_noise_ratio(b, a, data_range=1.0)), PSNR_CAP)


def l1(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute per-channel difference."""
    a, b = _pair(a, b, "l1")
    return float(np.mean(np.abs(a - b)))


def _grayscale(image: np.ndarray) -> np.ndarray:
    return image.mean(axis=2) if image.ndim == 3 else image


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """
    Structural similarity of the channel-mean grayscale images.

    Gaussian window with σ = 1.5 (11×11), K1 = 0.01, K2 = 0.03, dynamic
    range 1, population covariances, averaged over windows lying fully
    inside the image.

    Raises:
        DimensionError: different shapes
        ContractError: image smaller than the window
    """
    a, b = _pair(a, b, "ssim")
    x, y = _grayscale(a), _grayscale(b)
    if min(x.shape) < SSIM_WINDOW:
        raise ContractError(f"image {x.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    return float(structural_similarity(
        x, y,
        data_range=1.0,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
    ))


def image_metrics(pred: np.ndarray, gt: np.ndarray) -> dict[str, float]:
    return {"psnr": psnr(pred, gt), "ssim": ssim(pred, gt), "l1": l1(pred, gt)}
