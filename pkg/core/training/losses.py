"""
Training Losses

Photometric L1 over rendered rays, the canonical normal-consistency
regularizer and the part-label cross-entropy used to distill the
assigner.
"""

import numpy as np

from core.autodiff import Tensor, ops
from core.errors import DimensionError
from core.fields import OccupancyField

NORM_EPS = 1e-12


def photometric_loss(pred: Tensor, gt: np.ndarray, normalizer: float | None = None) -> Tensor:
    """
    Per-ray L1 color error summed over channels.

    Args:
        pred: rendered colors [R, 3]
        gt: target colors [R, 3]
        normalizer: divide the sum by this instead of ``R`` (used when a
            batch is split into chunks)
    """
    gt = np.asarray(gt, dtype=np.float64)
    if tuple(pred.shape) != gt.shape:
        raise DimensionError("photometric_loss", pred.shape, gt.shape)
    total = ops.sum(ops.absolute(pred - gt))
    return total * (1.0 / (normalizer if normalizer is not None else max(gt.shape[0], 1)))


def ball_perturbations(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` offsets uniformly distributed in a ball of ``radius`` [n, 3]."""
    directions = rng.normal(size=(n, 3))
    directions /= np.maximum(np.linalg.norm(directions, axis=1, keepdims=True), NORM_EPS)
    return directions * (radius * rng.uniform(size=(n, 1)) ** (1.0 / 3.0))


def normal_reg_loss(
    field: OccupancyField,
    points: np.ndarray,
    eps_radius: float,
    rng: np.random.Generator,
    normalizer: float | None = None,
) -> Tensor:
    """
    Mean ``‖n(x) − n(x + ε)‖`` over canonical surface points.

    Points are constants; gradients reach only the field's parameters.
    Pairs where either normal is degenerate are left out.

    Args:
        points: [M, 3] canonical surface points
        eps_radius: radius of the perturbation ball
        normalizer: divide the sum by this instead of the number of kept pairs
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    m = points.shape[0]
    if m == 0:
        return Tensor(0.0)
    shifted = points + ball_perturbations(m, eps_radius, rng)
    normals, degenerate = field.normal(np.concatenate([points, shifted]))
    keep = np.flatnonzero(~(degenerate[:m] | degenerate[m:]))
    if keep.size == 0:
        return Tensor(0.0)
    diff = ops.take(normals, keep) - ops.take(normals, keep + m)
    distance = ops.sqrt(ops.sum(diff * diff, axis=1) + NORM_EPS)
    return ops.sum(distance) * (1.0 / (normalizer if normalizer is not None else keep.size))


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of integer labels under ``softmax(logits)``."""
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if logits.ndim != 2 or logits.shape[0] != labels.shape[0]:
        raise DimensionError("cross_entropy", logits.shape, labels.shape)
    log_probs = ops.log_softmax(logits, axis=1)
    picked = ops.take(log_probs, (np.arange(labels.shape[0]), labels))
    return -ops.mean(picked)
