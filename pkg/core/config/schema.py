"""
Configuration Schema

Typed project configuration. Every section rejects unknown keys so a
misspelled override fails loudly instead of being ignored.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class LoggingSettings(StrictModel):
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class SyntheticSettings(StrictModel):
    """Synthetic dataset: FLAME-lite subject, coefficient ranges and camera orbit."""

    seed: int = 0
    n_frames: int = Field(20, ge=2)
    width: int = Field(128, ge=16)
    height: int = Field(128, ge=16)
    subdivisions: int = Field(3, ge=1, le=5)
    shape_scale: float = Field(0.5, ge=0.0)
    global_range: float = Field(0.15, ge=0.0, lt=0.5)
    neck_range: float = Field(0.2, ge=0.0, lt=0.5)
    jaw_range: float = Field(0.3, ge=0.0, lt=0.5)
    expression_range: float = Field(1.0, ge=0.0)
    camera_distance: float = Field(2.6, gt=0.0)
    azimuth_range: float = Field(0.35, ge=0.0)
    elevation_range: float = Field(0.15, ge=0.0)
    fov_degrees: float = Field(40.0, gt=0.0, lt=180.0)
    test_fraction: float = Field(0.2, ge=0.0, lt=1.0)
    n_samples: int = Field(128, ge=2)
    sharpness: float = Field(60.0, gt=0.0)


class HeadModelSettings(StrictModel):
    knn: int = Field(4, ge=1)


class NetSettings(StrictModel):
    depth: int = Field(4, ge=1)
    width: int = Field(64, ge=1)


class DeformerSettings(StrictModel):
    """Fine deformation variant and its network sizes."""

    variant: str = "part_based"
    n_parts: int = Field(7, ge=1)
    encoding_freqs: int = Field(6, ge=0)
    offset_scale: float = Field(0.1, gt=0.0)
    activation: Literal["softplus", "relu", "tanh"] = "softplus"
    local_net: NetSettings = NetSettings()
    assigner: NetSettings = NetSettings()
    width: int | None = Field(None, ge=1)


class CanonicalSettings(StrictModel):
    occupancy_depth: int = Field(8, ge=1)
    occupancy_width: int = Field(128, ge=1)
    position_freqs: int = Field(10, ge=0)
    color_depth: int = Field(4, ge=1)
    color_width: int = Field(128, ge=1)
    direction_freqs: int = Field(4, ge=0)
    fd_step: float = Field(1e-3, gt=0.0)
    occupancy_bias: float = -1.0
    activation: Literal["softplus", "relu", "tanh"] = "softplus"


class RenderSettings(StrictModel):
    """Ray bounds default to the scene sphere around the origin plus a margin."""

    n_samples: int = Field(64, ge=2)
    stratified: bool = True
    background: tuple[float, float, float] = (1.0, 1.0, 1.0)
    scene_radius: float = Field(0.8, gt=0.0)
    margin: float = Field(0.1, ge=0.0)
    near: float | None = Field(None, gt=0.0)
    far: float | None = Field(None, gt=0.0)
    chunk: int = Field(1024, ge=1)

    @model_validator(mode="after")
    def _check_bounds(self) -> "RenderSettings":
        if self.near is not None and self.far is not None and self.near >= self.far:
            raise ValueError(f"near ({self.near}) must be smaller than far ({self.far})")
        return self


class TrainSettings(StrictModel):
    total_steps: int = Field(10_000, ge=1)
    schedule: Literal["staged", "hard", "joint"] = "staged"
    stage1_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    distill_steps: int = Field(500, ge=0)
    lr_start: float = Field(5e-4, gt=0.0)
    lr_end: float = Field(5e-5, gt=0.0)
    lambda_: float = Field(0.005, ge=0.0, alias="lambda")
    rays_per_item: int = Field(1024, ge=1)
    batch_items: int = Field(4, ge=1)
    fg_fraction: float = Field(0.9, ge=0.0, le=1.0)
    eps_radius: float = Field(0.01, ge=0.0)
    ray_chunk: int = Field(64, ge=1)
    distill_points: int = Field(2048, ge=1)
    distill_sigma: float = Field(0.02, ge=0.0)
    checkpoint_every: int = Field(1000, ge=0)
    progress: bool = True


class EvalSettings(StrictModel):
    split: Literal["train", "test"] = "test"
    save_renders: bool = True


class ProjectConfig(StrictModel):
    """Complete resolved configuration of one run."""

    seed: int = 0
    workers: int = Field(1, ge=1)
    logging: LoggingSettings = LoggingSettings()
    synthetic: SyntheticSettings = SyntheticSettings()
    head_model: HeadModelSettings = HeadModelSettings()
    deformer: DeformerSettings = DeformerSettings()
    canonical: CanonicalSettings = CanonicalSettings()
    render: RenderSettings = RenderSettings()
    train: TrainSettings = TrainSettings()
    eval: EvalSettings = EvalSettings()

    def to_dict(self) -> dict:
        """Plain dictionary using file key names (``train.lambda``)."""
        return self.model_dump(mode="json", by_alias=True)
