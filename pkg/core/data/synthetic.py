"""
Synthetic Dataset Generator

Renders a FLAME-lite subject whose posed-space geometry is a set of
joint-attached ellipsoids. Every frame has known coefficients and camera,
so the output is a self-consistent ground-truth dataset for training and
evaluation.
"""

import logging
from pathlib import Path

import numpy as np
from tqdm import tqdm

from core.config.schema import RenderSettings, SyntheticSettings
from core.errors import DatasetError
from core.fields import AnalyticHeadField
from core.head_model import HeadModel, PoseExpr, build_flame_lite, save_head_model
from core.head_model.flame_lite import JAW, NECK
from core.render import Camera, FieldScene, RenderConfig, orbit_camera, render_frame

from .images import write_image, write_mask
from .manifest import MANIFEST_NAME, Dataset, frame_entry, load_dataset, write_manifest

logger = logging.getLogger(__name__)

HEAD_MODEL_NAME = "head_model.bin"


def sample_frame(
    model: HeadModel, beta: np.ndarray, spec: SyntheticSettings, rng: np.random.Generator
) -> PoseExpr:
    """Random in-range pose and expression; the jaw only opens."""
    theta = np.zeros(model.n_pose)
    theta[0:3] = rng.uniform(-spec.global_range, spec.global_range, 3)
    theta[3 * (NECK + 1) : 3 * (NECK + 2)] = rng.uniform(-spec.neck_range, spec.neck_range, 3)
    theta[3 * (JAW + 1)] = rng.uniform(0.0, spec.jaw_range)
    psi = rng.uniform(-spec.expression_range, spec.expression_range, model.n_expr)
    return PoseExpr(beta, theta, psi)


def sample_camera(spec: SyntheticSettings, rng: np.random.Generator) -> Camera:
    return orbit_camera(
        spec.camera_distance,
        azimuth=rng.uniform(-spec.azimuth_range, spec.azimuth_range),
        elevation=rng.uniform(-spec.elevation_range, spec.elevation_range),
        width=spec.width,
        height=spec.height,
        fov_degrees=spec.fov_degrees,
    )


def render_config(spec: SyntheticSettings, render: RenderSettings) -> RenderConfig:
    """Midpoint quadrature at the generator's sample count."""
    return RenderConfig.from_settings(
        render, spec.camera_distance, n_samples=spec.n_samples, stratified=False
    )


def render_ground_truth(
    model: HeadModel, pe: PoseExpr, camera: Camera, cfg: RenderConfig,
    sharpness: float = 60.0, workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Image [H, W, 3] and foreground mask (alpha > 0.5) of the analytic head."""
    scene = FieldScene(AnalyticHeadField(model, pe, sharpness=sharpness))
    frame = render_frame(camera, scene, cfg, workers=workers)
    return frame.image, frame.alpha > 0.5


def generate_synthetic(
    spec: SyntheticSettings,
    out_dir: str | Path,
    render: RenderSettings | None = None,
    workers: int = 1,
    progress: bool = False,
) -> Dataset:
    """
    Generate a dataset directory and return it loaded.

    Frame 0 is the neutral pose. The last ``test_fraction`` of frames form
    the test split.

    Raises:
        DatasetError: the output directory cannot be written
    """
    out_dir = Path(out_dir)
    render = render or RenderSettings()
    rng = np.random.default_rng(spec.seed)
    model = build_flame_lite(seed=spec.seed, subdivisions=spec.subdivisions)
    beta = rng.normal(0.0, spec.shape_scale, model.n_shape)
    cfg = render_config(spec, render)

    try:
        save_head_model(model, out_dir / HEAD_MODEL_NAME)
        entries = []
        for i in tqdm(range(spec.n_frames), desc="Rendering", disable=not progress):
            pe = sample_frame(model, beta, spec, rng)
            if i == 0:
                pe = PoseExpr(beta, np.zeros(model.n_pose), np.zeros(model.n_expr))
            camera = sample_camera(spec, rng)
            image, mask = render_ground_truth(model, pe, camera, cfg, spec.sharpness, workers)
            image_name, mask_name = f"images/{i:04d}.png", f"masks/{i:04d}.png"
            write_image(out_dir / image_name, image)
            write_mask(out_dir / mask_name, mask)
            entries.append(frame_entry(image_name, mask_name, camera, pe))
            logger.debug(f"Frame {i}: foreground {mask.mean():.1%}")

        n_test = int(round(spec.n_frames * spec.test_fraction))
        n_train = spec.n_frames - n_test
        write_manifest(out_dir / MANIFEST_NAME, HEAD_MODEL_NAME, beta, entries,
                       list(range(n_train)), list(range(n_train, spec.n_frames)))
    except OSError as e:
        raise DatasetError(f"cannot write synthetic dataset to {out_dir}: {e}") from e

    logger.info(f"Generated {spec.n_frames} synthetic frames in {out_dir}")
    return load_dataset(out_dir)
