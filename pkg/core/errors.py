"""
Error Types

Exception hierarchy shared by the autodiff core, the head model, the
renderer, the trainer, the data layer and the command-line pipeline.
"""

from typing import Any


class AvatarError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(AvatarError):
    """Operand shapes do not conform."""

    def __init__(self, op: str, *shapes: tuple[int, ...]):
        self.op = op
        self.shapes = shapes
        joined = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: shape mismatch {joined}")


class ContractError(AvatarError):
    """A documented precondition was violated by the caller."""


class NonFiniteError(AvatarError):
    """A tensor operation produced NaN or Inf values."""


class SingularTransformError(AvatarError):
    """An averaged skinning transform could not be inverted."""

    def __init__(self, message: str, points: Any = None):
        self.points = points
        super().__init__(message)


class DegenerateNormalError(AvatarError):
    """The occupancy gradient vanished where a normal was requested."""

    def __init__(self, message: str, mask: Any = None):
        self.mask = mask
        super().__init__(message)


class DatasetError(AvatarError):
    """A manifest or one of its frames is malformed."""

    def __init__(self, message: str, frame_index: int | None = None):
        self.frame_index = frame_index
        prefix = f"frame {frame_index}: " if frame_index is not None else ""
        super().__init__(f"{prefix}{message}")


class CheckpointError(AvatarError):
    """A tensor container file is corrupt or truncated."""


class ShapeMismatchError(CheckpointError):
    """Stored tensors do not match the architecture being restored."""


class ConfigError(AvatarError):
    """Configuration could not be parsed or validated."""

    def __init__(self, message: str, key_path: str | None = None):
        self.key_path = key_path
        prefix = f"{key_path}: " if key_path else ""
        super().__init__(f"{prefix}{message}")


class NonFiniteLossError(AvatarError):
    """The training loss became NaN or Inf."""

    def __init__(self, step: int, ray_indices: Any, detail: str = ""):
        self.step = step
        self.ray_indices = ray_indices
        super().__init__(
            f"non-finite loss at step {step} (rays {ray_indices}){': ' + detail if detail else ''}"
        )
