"""
Ray Sampling

Each training item is one frame with a set of pixels drawn mostly from
the foreground mask.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from core.config.schema import TrainSettings
from core.data import Dataset, Frame
from core.render import generate_rays

logger = logging.getLogger(__name__)


@dataclass
class RayItem:
    """Rays of one frame within a training batch."""

    frame_index: int
    pixels: np.ndarray
    origins: np.ndarray = field(repr=False)
    directions: np.ndarray = field(repr=False)
    colors: np.ndarray = field(repr=False)
    foreground: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.pixels)


def foreground_count(n_rays: int, fg_fraction: float) -> int:
    return min(n_rays, math.ceil(round(fg_fraction * n_rays, 9)))


def sample_pixels(
    mask: np.ndarray, n_rays: int, fg_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """
    Draw pixel indices with ``ceil(fg_fraction · n)`` from the foreground.

    An empty mask falls back to uniform sampling; a full mask yields only
    foreground rays.

    Returns:
        Tuple of (flat pixel indices [n], foreground flags [n])
    """
    flat = np.asarray(mask, dtype=bool).reshape(-1)
    fg = np.flatnonzero(flat)
    bg = np.flatnonzero(~flat)
    if fg.size == 0:
        logger.warning("Foreground mask is empty; sampling pixels uniformly")
        picked = rng.integers(0, flat.size, n_rays)
        return picked, flat[picked]
    n_fg = n_rays if bg.size == 0 else foreground_count(n_rays, fg_fraction)
    picked = np.concatenate([
        rng.choice(fg, n_fg, replace=n_fg > fg.size),
        rng.choice(bg, n_rays - n_fg, replace=n_rays - n_fg > bg.size) if n_rays > n_fg
        else np.empty(0, dtype=np.int64),
    ])
    return picked, flat[picked]


def sample_frame_rays(
    frame: Frame, n_rays: int, fg_fraction: float, rng: np.random.Generator
) -> RayItem:
    picked, foreground = sample_pixels(frame.mask, n_rays, fg_fraction, rng)
    width = frame.camera.width
    pixels = np.stack([picked % width, picked // width], axis=1)
    origins, directions = generate_rays(frame.camera, pixels)
    colors = frame.image.reshape(-1, 3)[picked]
    return RayItem(frame.index, pixels, origins, directions, colors, foreground)


def sample_ray_batch(dataset: Dataset, cfg: TrainSettings, rng: np.random.Generator) -> list[RayItem]:
    """``batch_items`` training frames (with replacement), ``rays_per_item`` rays each."""
    frames = rng.choice(np.asarray(dataset.train_idx), cfg.batch_items, replace=True)
    return [
        sample_frame_rays(dataset.frames[int(i)], cfg.rays_per_item, cfg.fg_fraction, rng)
        for i in frames
    ]
