"""
Base Deformer Interface

Every fine-deformation variant implements this interface so the field
warp, the trainer and the part visualization can use them
interchangeably.
"""

from abc import ABC, abstractmethod
from typing import Any

import numpy as np

from core.autodiff import ParameterSet, Tensor, ops
from core.errors import ContractError, DimensionError


class Deformer(ParameterSet, ABC):
    """
    Abstract base class for fine deformation fields.

    A deformer maps a coarsely deformed point ``x'`` and the frame
    condition (pose and expression coefficients) to a bounded offset in
    canonical space. Parameters are split into assignment parameters and
    local deformation parameters so training stages can freeze either.
    """

    def __init__(self, config: dict | None, cond_dim: int, rng: np.random.Generator):
        """
        Args:
            config: variant configuration dictionary
            cond_dim: width of the pose/expression condition vector
            rng: generator for weight initialization
        """
        self.config = config or {}
        self.name = ""
        self.cond_dim = cond_dim
        self.encoding_freqs = int(self.config.get("encoding_freqs", 6))
        self.offset_scale = float(self.config.get("offset_scale", 0.1))
        self.n_parts = int(self.config.get("n_parts", 7))
        self.validate_config()

    @property
    def input_dim(self) -> int:
        return 3 * (1 + 2 * self.encoding_freqs) + self.cond_dim

    def encode(self, x: Any, cond: np.ndarray) -> Tensor:
        """
        Network input ``[PE(x'), theta, psi]`` for a batch of points.

        Args:
            x: [M, 3] points (tensor or array)
            cond: [C] shared condition or [M, C] per-point conditions
        """
        points = x if isinstance(x, Tensor) else Tensor(np.asarray(x).reshape(-1, 3))
        if points.ndim != 2 or points.shape[1] != 3:
            raise DimensionError("encode", points.shape, (-1, 3))
        cond = np.asarray(cond, dtype=np.float64)
        if cond.shape[-1] != self.cond_dim:
            raise DimensionError("encode", cond.shape, (self.cond_dim,))
        cond = np.broadcast_to(cond, (points.shape[0], self.cond_dim))
        return ops.concat([ops.positional_encoding(points, self.encoding_freqs), cond], axis=1)

    def bound(self, raw: Tensor) -> Tensor:
        """Squash raw network outputs to ``offset_scale · tanh``."""
        return ops.tanh(raw) * self.offset_scale

    @abstractmethod
    def assign_parts(self, x: Any, cond: np.ndarray) -> Tensor:
        """
        Part probabilities of each point.

        Returns:
            [M, n_parts] rows summing to one
        """

    def part_logits(self, x: Any, cond: np.ndarray) -> Tensor:
        """Unnormalized part scores [M, n_parts]; log-probabilities by default."""
        return ops.log(self.assign_parts(x, cond))

    @abstractmethod
    def part_deform(self, x: Any, cond: np.ndarray) -> Tensor:
        """Soft-assigned offsets [M, 3]."""

    @abstractmethod
    def hard_part_deform(self, x: Any, cond: np.ndarray, labels: np.ndarray) -> Tensor:
        """Offsets [M, 3] using one given part per point."""

    @abstractmethod
    def assigner_parameters(self) -> dict[str, Tensor]:
        """Parameters of the part assignment network."""

    @abstractmethod
    def local_parameters(self) -> dict[str, Tensor]:
        """Parameters of the offset networks."""

    def named_parameters(self) -> dict[str, Tensor]:
        return {**self.assigner_parameters(), **self.local_parameters()}

    def offsets(self, x: Any, cond: np.ndarray, labels: np.ndarray | None = None) -> Tensor:
        """Hard offsets when labels are given, soft offsets otherwise."""
        if labels is None:
            return self.part_deform(x, cond)
        return self.hard_part_deform(x, cond, labels)

    def validate_config(self) -> bool:
        """
        Raises:
            ContractError: invalid sizes
        """
        if self.n_parts < 1:
            raise ContractError(f"n_parts must be >= 1, got {self.n_parts}")
        if self.encoding_freqs < 0:
            raise ContractError(f"encoding_freqs must be >= 0, got {self.encoding_freqs}")
        if self.offset_scale <= 0:
            raise ContractError(f"offset_scale must be positive, got {self.offset_scale}")
        return True

    def get_name(self) -> str:
        return self.name

    def get_config(self) -> dict:
        return self.config.copy()
