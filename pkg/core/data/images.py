"""PNG image and mask I/O."""

from pathlib import Path

import numpy as np
from PIL import Image

from core.errors import DatasetError


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.round(np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def write_image(path: str | Path, image: np.ndarray) -> Path:
    """Write an RGB float image in [0, 1] as an 8-bit PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(image), mode="RGB").save(path)
    return path


def read_image(path: str | Path) -> np.ndarray:
    """Read a PNG as float RGB in [0, 1] with shape [H, W, 3]."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def write_mask(path: str | Path, mask: np.ndarray) -> Path:
    """Write a boolean mask as a single-channel PNG with values {0, 255}."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8), mode="L").save(path)
    return path


def read_mask(path: str | Path) -> np.ndarray:
    """
    Read a binary mask.

    Raises:
        DatasetError: values other than 0 and 255
    """
    with Image.open(path) as img:
        values = np.asarray(img.convert("L"))
    if not np.isin(values, (0, 255)).all():
        raise DatasetError(f"mask {path} is not binary (values outside {{0, 255}})")
    return values == 255
