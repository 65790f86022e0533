"""
Coarse-to-Fine Warp

Maps posed-space points into canonical space: inverse skinning gives the
coarse position ``x'`` and the deformer adds a learned offset.
"""

from dataclasses import dataclass

import numpy as np

from core.autodiff import Tensor
from core.head_model import (
    CanonicalConfig,
    HeadModel,
    KnnIndex,
    PoseExpr,
    PosedHead,
    canonical_vertices,
)
from core.interfaces.deformer import Deformer


class PartLabeler:
    """Part label of the nearest canonical template vertex."""

    def __init__(self, model: HeadModel, canon: CanonicalConfig):
        self.labels = model.part_labels
        self.index = KnnIndex(canonical_vertices(model, canon))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        idx, _ = self.index.nearest(np.asarray(points, dtype=np.float64).reshape(-1, 3), 1)
        return self.labels[idx[:, 0]]


@dataclass
class WarpResult:
    """Canonical points with the intermediate coarse positions."""

    canonical: Tensor
    coarse: np.ndarray
    valid: np.ndarray
    labels: np.ndarray | None


def warp_points(
    posed: PosedHead,
    deformer: Deformer,
    points: np.ndarray,
    labeler: PartLabeler | None = None,
    strict: bool = True,
) -> WarpResult:
    """
    Batched ``x^c = x' + D(x', theta, psi)`` with ``x' = inverse_lbs(x)``.

    Args:
        posed: the frame's skinned head
        deformer: fine deformation field
        points: [M, 3] posed-space points
        labeler: when given, offsets use the hard label of each ``x'``
        strict: raise on singular skinning transforms instead of flagging

    Raises:
        SingularTransformError: strict mode and a non-invertible transform
    """
    inverse = posed.inverse(points, strict=strict)
    coarse = inverse.points
    labels = labeler(coarse) if labeler is not None else None
    offsets = deformer.offsets(coarse, posed.pe.condition, labels)
    return WarpResult(offsets + coarse, coarse, inverse.valid, labels)


def deform_to_canonical(
    model: HeadModel,
    canon: CanonicalConfig,
    deformer: Deformer,
    x: np.ndarray,
    pe: PoseExpr,
    hard: bool = False,
    k: int = 4,
) -> Tensor:
    """
    Canonical position of posed points.

    Args:
        x: a point [3] or points [M, 3]
        hard: use the nearest canonical vertex's part instead of the
            assigner probabilities

    Returns:
        [M, 3] tensor (recorded when the deformer's parameters are)

    Raises:
        SingularTransformError: a non-invertible averaged transform
    """
    labeler = PartLabeler(model, canon) if hard else None
    posed = PosedHead(model, pe, k)
    return warp_points(posed, deformer, np.asarray(x).reshape(-1, 3), labeler).canonical
