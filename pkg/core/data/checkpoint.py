"""
Training Checkpoints

A checkpoint is a tensor container holding the deformer and canonical
field parameters, the optimizer moments and, in its metadata, the step,
the deformer variant and the resolved configuration. Saving a loaded
checkpoint again reproduces the file byte for byte.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import numpy as np

from core.autodiff import ParameterSet
from core.container import read_container, write_container
from core.errors import CheckpointError, ShapeMismatchError

CHECKPOINT_FORMAT = "head-avatar-checkpoint"
CHECKPOINT_VERSION = 1

_SECTIONS = ("deformer", "canonical", "adam")


class OptimizerState(Protocol):
    def state_dict(self) -> tuple[dict[str, np.ndarray], dict[str, int]]: ...

    def load_state_dict(self, tensors: dict[str, np.ndarray], steps: dict[str, int]) -> None: ...


@dataclass
class Checkpoint:
    step: int
    variant: str
    config: dict[str, Any]
    deformer: dict[str, np.ndarray] = field(repr=False)
    canonical: dict[str, np.ndarray] = field(repr=False)
    optimizer: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    optimizer_steps: dict[str, int] = field(default_factory=dict, repr=False)


def save_checkpoint(
    path: str | Path,
    step: int,
    config: dict[str, Any],
    deformer: ParameterSet,
    canonical: ParameterSet,
    optimizer: OptimizerState | None = None,
    variant: str = "",
) -> Path:
    tensors: dict[str, np.ndarray] = {}
    tensors.update({f"deformer.{k}": v for k, v in deformer.state_dict().items()})
    tensors.update({f"canonical.{k}": v for k, v in canonical.state_dict().items()})
    steps: dict[str, int] = {}
    if optimizer is not None:
        moments, steps = optimizer.state_dict()
        tensors.update({f"adam.{k}": v for k, v in moments.items()})
    metadata = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "step": int(step),
        "variant": variant,
        "config": config,
        "adam_steps": {k: int(v) for k, v in steps.items()},
    }
    return write_container(path, tensors, metadata)


def load_checkpoint(path: str | Path) -> Checkpoint:
    """
    Raises:
        FileNotFoundError: missing file
        CheckpointError: not a checkpoint, or corrupt/truncated
    """
    tensors, metadata = read_container(path)
    if metadata.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a training checkpoint")
    if metadata.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {metadata.get('version')}")
    sections: dict[str, dict[str, np.ndarray]] = {name: {} for name in _SECTIONS}
    for name, value in tensors.items():
        prefix, _, rest = name.partition(".")
        if prefix not in sections or not rest:
            raise CheckpointError(f"{path}: unexpected tensor {name!r}")
        sections[prefix][rest] = value
    return Checkpoint(
        step=int(metadata["step"]),
        variant=str(metadata.get("variant", "")),
        config=metadata.get("config", {}),
        deformer=sections["deformer"],
        canonical=sections["canonical"],
        optimizer=sections["adam"],
        optimizer_steps={k: int(v) for k, v in metadata.get("adam_steps", {}).items()},
    )


def _load_exact(target: ParameterSet, state: dict[str, np.ndarray], what: str) -> None:
    unexpected = sorted(set(state) - set(target.named_parameters()))
    if unexpected:
        raise ShapeMismatchError(f"{what}: checkpoint holds unknown parameters {unexpected[:5]}")
    target.load_state_dict(state)


def restore_checkpoint(
    checkpoint: Checkpoint,
    deformer: ParameterSet,
    canonical: ParameterSet,
    optimizer: OptimizerState | None = None,
) -> None:
    """
    Copy checkpoint state into freshly built components.

    Raises:
        ShapeMismatchError: parameter names or shapes differ from the
            components (for example a different variant or network size)
    """
    _load_exact(deformer, checkpoint.deformer, "deformer")
    _load_exact(canonical, checkpoint.canonical, "canonical")
    if optimizer is not None and checkpoint.optimizer:
        optimizer.load_state_dict(checkpoint.optimizer, checkpoint.optimizer_steps)
