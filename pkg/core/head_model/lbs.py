"""
Linear Blend Skinning

Blendshape offsets, the joint chain, forward skinning of the template and
the inverse-skinning coarse deformation that maps posed points back to
canonical space through their nearest skinned vertices.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.errors import DimensionError, SingularTransformError

from .knn import KnnIndex
from .model import CanonicalConfig, HeadModel, PoseExpr, joint_order
from .rotation import rigid, rodrigues

logger = logging.getLogger(__name__)

SINGULAR_DETERMINANT = 1e-8


def pose_feature(model: HeadModel, theta: np.ndarray) -> np.ndarray:
    """Vectorized ``R(theta_k) - I`` of the non-global joints, length 9K."""
    rots = rodrigues(np.asarray(theta, dtype=np.float64).reshape(-1, 3)[1:])
    return (rots - np.eye(3)).reshape(-1)


def shape_offsets(model: HeadModel, beta: np.ndarray) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (model.n_shape,):
        raise DimensionError("shape_basis", model.shape_basis.shape, beta.shape)
    return model.shape_basis @ beta


def _dynamic_offsets(model: HeadModel, pe: PoseExpr) -> np.ndarray:
    """Pose-corrective plus expression offsets ``B_P + B_E``."""
    if pe.theta.shape != (model.n_pose,):
        raise DimensionError("pose_basis", model.pose_basis.shape, pe.theta.shape)
    if pe.psi.shape != (model.n_expr,):
        raise DimensionError("expr_basis", model.expr_basis.shape, pe.psi.shape)
    return model.pose_basis @ pose_feature(model, pe.theta) + model.expr_basis @ pe.psi


def blendshape_offsets(model: HeadModel, pe: PoseExpr) -> np.ndarray:
    """
    Per-vertex offsets ``B_S(beta) + B_P(theta) + B_E(psi)``.

    Returns:
        [N_v, 3]

    Raises:
        DimensionError: coefficient lengths differ from the basis widths
    """
    return shape_offsets(model, pe.beta) + _dynamic_offsets(model, pe)


def joint_positions(model: HeadModel, beta: np.ndarray) -> np.ndarray:
    """Shape-adjusted rest joint positions [K, 3]."""
    return model.joint_regressor @ (model.template_vertices + shape_offsets(model, beta))


def joint_transforms(model: HeadModel, beta: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """
    Relative-to-rest joint transforms.

    ``theta[0:3]`` is a global rotation about the origin applied after the
    chain; ``theta[3(k+1):3(k+2)]`` rotates joint k about its rest position.

    Returns:
        [K, 4, 4] transforms mapping rest-pose points to posed points
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (model.n_pose,):
        raise DimensionError("theta", theta.shape, (model.n_pose,))
    joints = joint_positions(model, beta)
    rots = rodrigues(theta.reshape(-1, 3))
    global_rot, joint_rots = rots[0], rots[1:]

    world = np.zeros((model.n_joints, 4, 4))
    for k in joint_order(model.parent):
        p = model.parent[k]
        offset = joints[k] - joints[p] if p >= 0 else joints[k]
        local = rigid(joint_rots[k], offset)
        world[k] = local if p < 0 else world[p] @ local

    relative = world.copy()
    relative[:, :3, 3] -= np.einsum("kij,kj->ki", world[:, :3, :3], joints)
    return rigid(global_rot, np.zeros(3)) @ relative


def vertex_transforms(model: HeadModel, pe: PoseExpr) -> np.ndarray:
    """Blended per-vertex transforms ``sum_k W[i, k] M_k`` [N_v, 4, 4]."""
    transforms = joint_transforms(model, pe.beta, pe.theta)
    return np.einsum("vk,kij->vij", model.blend_weights, transforms)


def lbs_forward(model: HeadModel, pe: PoseExpr) -> np.ndarray:
    """
    Skin the template under the given coefficients.

    Returns:
        Posed vertices [N_v, 3]
    """
    rest = model.template_vertices + blendshape_offsets(model, pe)
    blended = vertex_transforms(model, pe)
    return np.einsum("vij,vj->vi", blended[:, :3, :3], rest) + blended[:, :3, 3]


def canonical_vertices(model: HeadModel, canon: CanonicalConfig) -> np.ndarray:
    """Template carrying the average shape, at zero pose and expression."""
    return model.template_vertices + shape_offsets(model, canon.beta_avg)


@dataclass
class InverseResult:
    """Canonical points and which of them had invertible transforms."""

    points: np.ndarray
    valid: np.ndarray
    neighbors: np.ndarray


class PosedHead:
    """
    One frame's skinned head, ready for inverse skinning queries.

    Precomputes the posed vertices, their inverted per-vertex transforms and
    the negated dynamic offsets; queries are then a k-NN lookup plus a
    weighted average.
    """

    def __init__(self, model: HeadModel, pe: PoseExpr, k: int = 4):
        pe.check(model)
        self.model = model
        self.pe = pe
        self.k = k
        blended = vertex_transforms(model, pe)
        rest = model.template_vertices + blendshape_offsets(model, pe)
        self.vertices = np.einsum("vij,vj->vi", blended[:, :3, :3], rest) + blended[:, :3, 3]

        det = np.linalg.det(blended[:, :3, :3])
        self.singular_vertices = np.abs(det) < SINGULAR_DETERMINANT
        safe = blended.copy()
        safe[self.singular_vertices] = np.eye(4)
        self.inverse_transforms = np.linalg.inv(safe)
        self.inverse_offsets = -_dynamic_offsets(model, pe)
        self.index = KnnIndex(self.vertices)

    def inverse(self, points: np.ndarray, strict: bool = True) -> InverseResult:
        """
        Map posed points to canonical space.

        Args:
            points: [M, 3] posed-space points
            strict: raise on a singular averaged transform instead of
                marking the point invalid

        Raises:
            SingularTransformError: strict mode and a point whose averaged
                inverse transform is not invertible
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        idx, weights = self.index.query(points, self.k)
        inv = np.einsum("mk,mkij->mij", weights, self.inverse_transforms[idx])
        offsets = np.einsum("mk,mkj->mj", weights, self.inverse_offsets[idx])
        canonical = np.einsum("mij,mj->mi", inv[:, :3, :3], points) + inv[:, :3, 3] + offsets

        bad = self.singular_vertices[idx].any(axis=1)
        bad |= np.abs(np.linalg.det(inv[:, :3, :3])) < SINGULAR_DETERMINANT
        if bad.any():
            if strict:
                first = points[np.argmax(bad)]
                raise SingularTransformError(
                    f"singular skinning transform near point "
                    f"({first[0]:.4f}, {first[1]:.4f}, {first[2]:.4f})",
                    points=points[bad],
                )
            logger.debug(f"{int(bad.sum())} points with singular skinning transforms")
            canonical[bad] = points[bad]
        return InverseResult(canonical, ~bad, idx)


def inverse_lbs(
    model: HeadModel,
    canon: CanonicalConfig,
    x: np.ndarray,
    pe: PoseExpr,
    k: int = 4,
) -> np.ndarray:
    """
    Coarse deformation of posed points into canonical space.

    ``x' = M^-1 x + T_P^-1`` with both terms averaged over the k nearest
    posed vertices using inverse-distance weights. Only the pose-corrective
    and expression offsets are removed: the canonical template carries
    ``canon.beta_avg``, and frames are assumed to share that shape.

    Args:
        x: a point [3] or points [M, 3]

    Raises:
        SingularTransformError: a non-invertible averaged transform
    """
    if canon.beta_avg.shape != (model.n_shape,):
        raise DimensionError("beta_avg", canon.beta_avg.shape, (model.n_shape,))
    x = np.asarray(x, dtype=np.float64)
    result = PosedHead(model, pe, k).inverse(x.reshape(-1, 3))
    return result.points.reshape(x.shape)
