"""
Dataset Manifest

A dataset directory holds a head-model file, per-frame RGB images and
foreground masks, and ``manifest.json`` describing cameras, per-frame
coefficients and the train/test split. Paths in the manifest are
relative to the manifest's directory.
"""

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.errors import AvatarError, DatasetError
from core.head_model import CanonicalConfig, HeadModel, PoseExpr, load_head_model
from core.render import Camera

from .images import read_image, read_mask

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class CameraEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fx: float
    fy: float
    cx: float
    cy: float
    world_from_camera: list[float] = Field(min_length=16, max_length=16)
    width: int
    height: int


class FrameEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    image: str
    mask: str
    camera: CameraEntry
    beta: list[float]
    theta: list[float]
    psi: list[float]


class ManifestModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    head_model: str
    beta_avg: list[float]
    frames: list[FrameEntry]
    train_idx: list[int]
    test_idx: list[int]


@dataclass(eq=False)
class Frame:
    """One calibrated frame; pixels are loaded on first access."""

    index: int
    image_path: Path
    mask_path: Path
    camera: Camera
    pe: PoseExpr

    @cached_property
    def image(self) -> np.ndarray:
        try:
            image = read_image(self.image_path)
        except OSError as e:
            raise DatasetError(f"cannot read image {self.image_path}: {e}", self.index) from e
        self._check_shape(image.shape[:2], "image")
        return image

    @cached_property
    def mask(self) -> np.ndarray:
        try:
            mask = read_mask(self.mask_path)
        except DatasetError as e:
            raise DatasetError(str(e), self.index) from e
        except OSError as e:
            raise DatasetError(f"cannot read mask {self.mask_path}: {e}", self.index) from e
        self._check_shape(mask.shape, "mask")
        return mask

    def _check_shape(self, shape: tuple[int, ...], what: str) -> None:
        expected = (self.camera.height, self.camera.width)
        if tuple(shape) != expected:
            raise DatasetError(f"{what} is {shape[1]}x{shape[0]}, camera expects "
                               f"{expected[1]}x{expected[0]}", self.index)


@dataclass(eq=False)
class Dataset:
    root: Path
    head_model_path: Path
    beta_avg: np.ndarray
    frames: list[Frame]
    train_idx: list[int]
    test_idx: list[int]
    _model: HeadModel | None = field(default=None, repr=False)

    @property
    def head_model(self) -> HeadModel:
        if self._model is None:
            self._model = load_head_model(self.head_model_path)
        return self._model

    @property
    def canonical(self) -> CanonicalConfig:
        return CanonicalConfig(self.beta_avg)

    def split(self, name: str) -> list[int]:
        if name == "train":
            return list(self.train_idx)
        if name == "test":
            return list(self.test_idx)
        raise DatasetError(f"unknown split {name!r} (expected 'train' or 'test')")

    def verify(self) -> None:
        """Load every image and mask once, raising on the first bad frame."""
        for frame in self.frames:
            _ = frame.image, frame.mask

    def __len__(self) -> int:
        return len(self.frames)


def frame_entry(image: str, mask: str, camera: Camera, pe: PoseExpr) -> dict[str, Any]:
    return {"image": image, "mask": mask, "camera": camera.to_dict(), **pe.to_dict()}


def write_manifest(
    path: str | Path,
    head_model: str,
    beta_avg: np.ndarray,
    frames: list[dict[str, Any]],
    train_idx: list[int],
    test_idx: list[int],
) -> Path:
    path = Path(path)
    manifest = ManifestModel(
        head_model=head_model,
        beta_avg=[float(b) for b in np.ravel(beta_avg)],
        frames=frames,
        train_idx=list(train_idx),
        test_idx=list(test_idx),
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.model_dump(), indent=2) + "\n", encoding="utf-8")
    return path


def _frame_of(error: ValidationError) -> int | None:
    for item in error.errors():
        loc = item.get("loc", ())
        if len(loc) >= 2 and loc[0] == "frames" and isinstance(loc[1], int):
            return loc[1]
    return None


def load_dataset(path: str | Path, verify: bool = False) -> Dataset:
    """
    Load a dataset from its manifest file or directory.

    Args:
        path: ``manifest.json`` or the directory holding it
        verify: also decode every image and mask up front

    Raises:
        FileNotFoundError: no manifest at ``path``
        DatasetError: malformed manifest, missing files, out-of-range
            coefficients or inconsistent splits; names the frame index
            where one applies
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    root = path.parent

    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(f"{path} is not valid JSON: {e}") from e
    try:
        manifest = ManifestModel.model_validate(raw)
    except ValidationError as e:
        raise DatasetError(f"invalid manifest {path}: {e}", _frame_of(e)) from e

    model_path = root / manifest.head_model
    if not model_path.exists():
        raise DatasetError(f"head model file not found: {model_path}")
    model = load_head_model(model_path)
    beta_avg = np.asarray(manifest.beta_avg, dtype=np.float64)
    if beta_avg.size != model.n_shape:
        raise DatasetError(f"beta_avg has {beta_avg.size} entries, head model has {model.n_shape}")

    frames: list[Frame] = []
    for i, entry in enumerate(manifest.frames):
        try:
            camera = Camera.from_dict(entry.camera.model_dump())
            pe = PoseExpr(np.asarray(entry.beta), np.asarray(entry.theta), np.asarray(entry.psi))
            pe.check(model)
        except AvatarError as e:
            raise DatasetError(str(e), i) from e
        image_path, mask_path = root / entry.image, root / entry.mask
        for kind, p in (("image", image_path), ("mask", mask_path)):
            if not p.exists():
                raise DatasetError(f"{kind} file not found: {p}", i)
        frames.append(Frame(i, image_path, mask_path, camera, pe))

    n = len(frames)
    for name, idx in (("train_idx", manifest.train_idx), ("test_idx", manifest.test_idx)):
        bad = [i for i in idx if not 0 <= i < n]
        if bad:
            raise DatasetError(f"{name} references missing frames {bad}", bad[0])
        if len(set(idx)) != len(idx):
            raise DatasetError(f"{name} lists a frame twice")
    overlap = sorted(set(manifest.train_idx) & set(manifest.test_idx))
    if overlap:
        raise DatasetError(f"train and test splits share frames {overlap}", overlap[0])
    if not manifest.train_idx:
        raise DatasetError("train split is empty")

    dataset = Dataset(root, model_path, beta_avg, frames, manifest.train_idx,
                      manifest.test_idx, _model=model)
    if verify:
        dataset.verify()
    logger.info(f"Loaded dataset {root}: {n} frames "
                f"({len(dataset.train_idx)} train, {len(dataset.test_idx)} test)")
    return dataset
