"""Head-model files in the tensor container format."""

import logging
from pathlib import Path

from core.container import read_container, write_container
from core.errors import CheckpointError

from .model import HeadModel

logger = logging.getLogger(__name__)

REQUIRED_TENSORS = (
    "template_vertices",
    "faces",
    "joint_regressor",
    "parent",
    "blend_weights",
    "shape_basis",
    "pose_basis",
    "expr_basis",
    "part_labels",
)


def save_head_model(model: HeadModel, path: str | Path) -> Path:
    metadata = {"part_names": list(model.part_names)}
    path = write_container(path, model.to_arrays(), metadata)
    logger.info(f"Saved head model ({model.n_vertices} vertices, {model.n_joints} joints) to {path}")
    return path


def load_head_model(path: str | Path) -> HeadModel:
    """
    Read a head model and validate its invariants.

    Raises:
        FileNotFoundError: missing file
        CheckpointError: corrupt container or missing tensors
    """
    arrays, metadata = read_container(path)
    missing = [name for name in REQUIRED_TENSORS if name not in arrays]
    if missing:
        raise CheckpointError(f"{path}: head model is missing tensors {missing}")
    kwargs = {name: arrays[name] for name in REQUIRED_TENSORS}
    if metadata.get("part_names"):
        kwargs["part_names"] = tuple(metadata["part_names"])
    return HeadModel(**kwargs)
