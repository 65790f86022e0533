"""
Occupancy Fields

Shared behaviour of every occupancy/color field: central-difference
normals built from six occupancy evaluations that stay on the tape, so a
loss on normals remains a first-order function of the field parameters.
"""

from typing import Any

import numpy as np

from core.autodiff import Tensor, ops
from core.errors import DegenerateNormalError, DimensionError

DEGENERATE_GRADIENT = 1e-8

_AXES = np.eye(3)


def as_points(x: Any) -> Tensor:
    """View a point or a batch of points as an [M, 3] tensor."""
    if isinstance(x, Tensor):
        if x.ndim == 1:
            return ops.reshape(x, (1, 3))
        return x
    points = Tensor(np.asarray(x, dtype=np.float64).reshape(-1, 3))
    return points


class OccupancyField:
    """
    Base class of implicit fields with ``o(x) ∈ [0, 1]`` and ``c(x, n, d)``.

    Subclasses implement ``occupancy_and_feature`` and ``color``.
    """

    fd_step: float = 1e-3

    def occupancy_and_feature(self, x: Tensor) -> tuple[Tensor, Tensor | None]:
        """
        Returns:
            Tuple of (occupancy [M], geometry feature [M, F] or None)
        """
        raise NotImplementedError

    def color(self, x: Any, n: Any, d: Any, feature: Tensor | None = None) -> Tensor:
        raise NotImplementedError

    def occupancy(self, x: Any) -> Tensor:
        return self.occupancy_and_feature(as_points(x))[0]

    def gradient(self, x: Any) -> Tensor:
        """Central-difference occupancy gradient [M, 3] with step ``fd_step``."""
        points = as_points(x)
        m = points.shape[0]
        h = self.fd_step
        shifts = np.concatenate([_AXES * h, -_AXES * h])  # [6, 3]
        offset_points = ops.reshape(
            ops.reshape(points, (1, m, 3)) + shifts[:, None, :], (6 * m, 3)
        )
        values = ops.reshape(self.occupancy(offset_points), (6, m))
        plus = ops.take(values, slice(0, 3))
        minus = ops.take(values, slice(3, 6))
        return ops.transpose((plus - minus) * (1.0 / (2.0 * h)))

    def normal(self, x: Any, strict: bool = False) -> tuple[Tensor, np.ndarray]:
        """
        Unit normals ``∇o / ‖∇o‖`` (pointing towards higher occupancy).

        Rows whose gradient norm is below 1e-8 are degenerate: they are
        returned as zero vectors and flagged in the mask.

        Args:
            strict: raise instead of flagging degenerate rows

        Returns:
            Tuple of (normals [M, 3], degenerate mask [M])

        Raises:
            DegenerateNormalError: strict mode and a vanishing gradient
        """
        grad = self.gradient(x)
        squared = ops.sum(grad * grad, axis=1)
        degenerate = np.sqrt(np.asarray(squared.data, dtype=np.float64)) < DEGENERATE_GRADIENT
        if degenerate.any() and strict:
            raise DegenerateNormalError(
                f"occupancy gradient vanishes at {int(degenerate.sum())} points",
                mask=degenerate,
            )
        length = ops.sqrt(squared + degenerate.astype(np.float64))
        unit = grad / ops.reshape(length, (grad.shape[0], 1))
        return ops.where(degenerate[:, None], np.zeros((1, 3)), unit), degenerate


def check_directions(d: Any, m: int) -> np.ndarray:
    """Unit view directions as an [M, 3] array; a single direction is shared."""
    d = np.asarray(d.data if isinstance(d, Tensor) else d, dtype=np.float64).reshape(-1, 3)
    if d.shape[0] == 1:
        d = np.broadcast_to(d, (m, 3))
    if d.shape != (m, 3):
        raise DimensionError("directions", d.shape, (m, 3))
    return d
