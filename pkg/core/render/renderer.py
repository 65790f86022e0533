"""
Volume Renderer

Stratified ray sampling, occupancy quadrature with white-background
compositing, surface-point location and tile-parallel image rendering.

A scene turns posed-space samples into occupancies and colors. The
learned avatar warps samples into canonical space first; closed-form
fields are evaluated in place.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from core.autodiff import Tensor, ops
from core.errors import ContractError
from core.fields.occupancy import OccupancyField
from core.fields.warp import PartLabeler, warp_points
from core.head_model import PosedHead
from core.interfaces.deformer import Deformer

from .camera import Camera, generate_rays

logger = logging.getLogger(__name__)


@dataclass
class RenderConfig:
    near: float
    far: float
    n_samples: int = 64
    background: tuple[float, float, float] = (1.0, 1.0, 1.0)
    stratified: bool = True
    chunk: int = 1024

    def __post_init__(self) -> None:
        if not 0 < self.near < self.far:
            raise ContractError(f"need 0 < near < far, got near={self.near}, far={self.far}")
        if self.n_samples < 2:
            raise ContractError(f"need at least 2 samples per ray, got {self.n_samples}")
        self.background = tuple(float(c) for c in self.background)

    @classmethod
    def around(cls, camera_distance: float, scene_radius: float, margin: float = 0.1,
               **kwargs: Any) -> "RenderConfig":
        """Ray bounds covering a bounding sphere plus a relative margin."""
        reach = scene_radius * (1.0 + margin)
        return cls(near=max(camera_distance - reach, 1e-3), far=camera_distance + reach, **kwargs)

    @classmethod
    def from_settings(cls, settings: Any, camera_distance: float, **overrides: Any) -> "RenderConfig":
        """
        Build from the render section of the project configuration.

        Explicit ``near``/``far`` win; otherwise the bounds wrap the scene
        sphere seen from ``camera_distance``.
        """
        fields = {
            "n_samples": settings.n_samples,
            "background": settings.background,
            "stratified": settings.stratified,
            "chunk": settings.chunk,
            **overrides,
        }
        if settings.near is not None and settings.far is not None:
            return cls(near=settings.near, far=settings.far, **fields)
        return cls.around(camera_distance, settings.scene_radius, settings.margin, **fields)


def sample_points(
    n_rays: int, cfg: RenderConfig, rng: np.random.Generator | None = None
) -> np.ndarray:
    """
    Sample depths along rays: one uniform draw per equal bin of
    ``[near, far]``, or the bin midpoints when not stratified.

    Returns:
        [n_rays, K] ascending depths
    """
    edges = np.linspace(cfg.near, cfg.far, cfg.n_samples + 1)
    lower, width = edges[:-1], np.diff(edges)
    if cfg.stratified:
        rng = rng or np.random.default_rng()
        return lower + width * rng.random((n_rays, cfg.n_samples))
    return np.broadcast_to(lower + 0.5 * width, (n_rays, cfg.n_samples)).copy()


def accumulate_weights(
    occupancy: Any, transmittance: Any = None
) -> tuple[Tensor, Tensor]:
    """
    Quadrature weights ``w_i = o_i · prod_{j<i} (1 − o_j)``.

    Weights can be streamed over consecutive sample chunks by passing the
    transmittance returned for the previous chunk.

    Args:
        occupancy: [R, K] occupancies in sample order
        transmittance: [R] product of ``1 − o`` over earlier chunks

    Returns:
        Tuple of (weights [R, K], transmittance after the chunk [R])
    """
    occupancy = occupancy if isinstance(occupancy, Tensor) else Tensor(occupancy)
    free = 1.0 - occupancy
    prefix = ops.exclusive_cumprod(free)
    last = occupancy.shape[-1] - 1
    remaining = prefix[:, last] * free[:, last]
    if transmittance is not None:
        shared = ops.reshape(transmittance, (occupancy.shape[0], 1))
        return occupancy * prefix * shared, remaining * transmittance
    return occupancy * prefix, remaining


def composite(weights: Tensor, colors: Tensor, background: Any) -> tuple[Tensor, Tensor]:
    """
    ``C = sum_i w_i c_i + (1 − sum_i w_i) · background``.

    Returns:
        Tuple of (rgb [R, 3], accumulated weight [R])
    """
    n_rays = weights.shape[0]
    acc = ops.sum(weights, axis=1)
    radiance = ops.sum(colors * ops.reshape(weights, (*weights.shape, 1)), axis=1)
    remainder = ops.reshape(1.0 - acc, (n_rays, 1))
    return radiance + remainder * np.asarray(background, dtype=np.float64), acc


@dataclass
class SurfaceHits:
    """First upward 0.5 crossing of each ray (``hit`` false when absent)."""

    hit: np.ndarray
    index: np.ndarray
    fraction: np.ndarray
    t: np.ndarray

    def interpolate(self, values: np.ndarray) -> np.ndarray:
        """Interpolate per-sample values [R, K, ...] at the hits of hitting rays."""
        rows = np.flatnonzero(self.hit)
        i = self.index[rows]
        f = self.fraction[rows].reshape(-1, *([1] * (values.ndim - 2)))
        return values[rows, i] + f * (values[rows, i + 1] - values[rows, i])


def find_surface_points(t: np.ndarray, occupancy: np.ndarray) -> SurfaceHits:
    """
    Locate the first adjacent sample pair whose occupancy rises through 0.5.

    Args:
        t: [R, K] sample depths
        occupancy: [R, K] occupancy values
    """
    t = np.asarray(t, dtype=np.float64)
    o = np.asarray(occupancy, dtype=np.float64)
    crossing = (o[:, :-1] < 0.5) & (o[:, 1:] >= 0.5)
    hit = crossing.any(axis=1)
    index = np.argmax(crossing, axis=1)
    rows = np.arange(len(o))
    lo, hi = o[rows, index], o[rows, index + 1]
    span = np.where(hit, hi - lo, 1.0)
    fraction = np.where(hit, (0.5 - lo) / span, 0.0)
    t_hit = t[rows, index] + fraction * (t[rows, index + 1] - t[rows, index])
    return SurfaceHits(hit, index, fraction, np.where(hit, t_hit, np.nan))


def find_surface_point(
    origin: Any, direction: Any, t: Any, occupancy: Any
) -> np.ndarray | None:
    """Surface point of one evaluated ray, or None without a 0.5 crossing."""
    hits = find_surface_points(np.reshape(t, (1, -1)), np.reshape(occupancy, (1, -1)))
    if not hits.hit[0]:
        return None
    return np.asarray(origin, dtype=np.float64) + hits.t[0] * np.asarray(direction, dtype=np.float64)


# -- scenes ---------------------------------------------------------------------


@dataclass
class SampleEvaluation:
    """Field values at the samples of a batch of rays."""

    occupancy: Tensor
    color: Tensor
    canonical: np.ndarray
    valid: np.ndarray
    degenerate: np.ndarray


class Scene(Protocol):
    def evaluate(self, points: np.ndarray, directions: np.ndarray) -> SampleEvaluation: ...


def shade_samples(
    field: OccupancyField, points: Any, directions: np.ndarray
) -> tuple[Tensor, Tensor, np.ndarray]:
    """
    Occupancy, color and degenerate-normal mask at [M, 3] points.

    Samples whose normal is degenerate are colored with ``−d`` as normal.
    """
    occupancy, feature = field.occupancy_and_feature(points)
    normals, degenerate = field.normal(points)
    if degenerate.any():
        normals = ops.where(degenerate[:, None], -directions, normals)
    return occupancy, field.color(points, normals, directions, feature), degenerate


class FieldScene:
    """A closed-form field evaluated directly in posed space."""

    def __init__(self, field: OccupancyField):
        self.field = field

    def evaluate(self, points: np.ndarray, directions: np.ndarray) -> SampleEvaluation:
        n_rays, k = points.shape[:2]
        flat_dirs = np.repeat(directions, k, axis=0)
        occupancy, color, degenerate = shade_samples(
            self.field, Tensor(points.reshape(-1, 3)), flat_dirs
        )
        return SampleEvaluation(
            ops.reshape(occupancy, (n_rays, k)),
            ops.reshape(color, (n_rays, k, 3)),
            points,
            np.ones(n_rays, dtype=bool),
            degenerate.reshape(n_rays, k),
        )


class AvatarScene:
    """
    The learned avatar for one frame: samples are inverse-skinned, offset
    by the deformer and evaluated by the canonical field.
    """

    def __init__(
        self,
        posed: PosedHead,
        deformer: Deformer,
        canonical: OccupancyField,
        labeler: PartLabeler | None = None,
    ):
        self.posed = posed
        self.deformer = deformer
        self.canonical = canonical
        self.labeler = labeler

    def evaluate(self, points: np.ndarray, directions: np.ndarray) -> SampleEvaluation:
        n_rays, k = points.shape[:2]
        warp = warp_points(self.posed, self.deformer, points.reshape(-1, 3),
                           self.labeler, strict=False)
        flat_dirs = np.repeat(directions, k, axis=0)
        occupancy, color, degenerate = shade_samples(self.canonical, warp.canonical, flat_dirs)
        valid = warp.valid.reshape(n_rays, k).all(axis=1)
        if not valid.all():
            logger.warning(f"Skipping {int((~valid).sum())} rays with singular skinning transforms")
        return SampleEvaluation(
            ops.reshape(occupancy, (n_rays, k)),
            ops.reshape(color, (n_rays, k, 3)),
            np.asarray(warp.canonical.data, dtype=np.float64).reshape(n_rays, k, 3),
            valid,
            degenerate.reshape(n_rays, k),
        )


# -- rays and images ------------------------------------------------------------


@dataclass
class RayBatch:
    """Rendered colors of a batch of rays plus per-sample diagnostics."""

    rgb: Tensor
    acc: Tensor
    t: np.ndarray
    occupancy: np.ndarray
    canonical: np.ndarray
    valid: np.ndarray
    degenerate: np.ndarray

    def surface(self) -> SurfaceHits:
        hits = find_surface_points(self.t, self.occupancy)
        hits.hit &= self.valid
        return hits


def render_rays(
    scene: Scene,
    origins: np.ndarray,
    directions: np.ndarray,
    cfg: RenderConfig,
    rng: np.random.Generator | None = None,
) -> RayBatch:
    """
    Render a batch of rays through a scene.

    Rays whose samples could not be mapped (singular skinning) are marked
    invalid and composited as background.
    """
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    t = sample_points(len(origins), cfg, rng)
    points = origins[:, None, :] + t[:, :, None] * directions[:, None, :]
    samples = scene.evaluate(points, directions)
    weights, _ = accumulate_weights(samples.occupancy)
    rgb, acc = composite(weights, samples.color, cfg.background)
    if not samples.valid.all():
        keep = samples.valid[:, None]
        rgb = ops.where(keep, rgb, np.asarray(cfg.background)[None, :])
        acc = ops.where(samples.valid, acc, 0.0)
    return RayBatch(
        rgb,
        acc,
        t,
        np.asarray(samples.occupancy.data, dtype=np.float64),
        samples.canonical,
        samples.valid,
        samples.degenerate,
    )


def render_ray(
    origin: Any,
    direction: Any,
    scene: Scene,
    cfg: RenderConfig,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, float]:
    """
    Render a single ray.

    Returns:
        Tuple of (rgb [3], accumulated weight)
    """
    batch = render_rays(scene, np.reshape(origin, (1, 3)), np.reshape(direction, (1, 3)), cfg, rng)
    return np.asarray(batch.rgb.data[0], dtype=np.float64), float(batch.acc.data[0])


@dataclass
class RenderedFrame:
    """An image with its accumulated weights, surface hits and hit depths."""

    image: np.ndarray
    alpha: np.ndarray
    hit: np.ndarray = field(repr=False)
    surface_canonical: np.ndarray = field(repr=False)
    depth: np.ndarray = field(repr=False)


def render_frame(
    camera: Camera,
    scene: Scene,
    cfg: RenderConfig,
    seed: int = 0,
    workers: int = 1,
) -> RenderedFrame:
    """
    Render every pixel of a camera.

    Pixels are split into fixed tiles of ``cfg.chunk`` rays, each with its
    own generator seeded from ``(seed, tile)``, so the result does not
    depend on the number of workers.
    """
    pixels = camera.pixel_grid()
    origins, directions = generate_rays(camera, pixels)
    starts = list(range(0, len(pixels), cfg.chunk))

    def render_tile(tile: int) -> RayBatch:
        rng = np.random.default_rng([seed, tile])
        sl = slice(starts[tile], starts[tile] + cfg.chunk)
        return render_rays(scene, origins[sl], directions[sl], cfg, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(render_tile, range(len(starts))))
    else:
        batches = [render_tile(i) for i in range(len(starts))]

    h, w = camera.height, camera.width
    rgb = np.concatenate([np.asarray(b.rgb.data, dtype=np.float64) for b in batches])
    acc = np.concatenate([np.asarray(b.acc.data, dtype=np.float64) for b in batches])
    hit = np.zeros(len(pixels), dtype=bool)
    surface = np.full((len(pixels), 3), np.nan)
    depth = np.full(len(pixels), np.nan)
    for start, batch in zip(starts, batches, strict=True):
        hits = batch.surface()
        rows = np.flatnonzero(hits.hit)
        hit[start + rows] = True
        surface[start + rows] = hits.interpolate(batch.canonical)
        depth[start + rows] = hits.t[rows]
    return RenderedFrame(
        np.clip(rgb, 0.0, 1.0).reshape(h, w, 3),
        np.clip(acc, 0.0, 1.0).reshape(h, w),
        hit.reshape(h, w),
        surface.reshape(h, w, 3),
        depth.reshape(h, w),
    )


def render_image(
    camera: Camera, scene: Scene, cfg: RenderConfig, seed: int = 0, workers: int = 1
) -> np.ndarray:
    """RGB image [H, W, 3] in [0, 1]."""
    return render_frame(camera, scene, cfg, seed, workers).image
