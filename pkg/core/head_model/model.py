"""
Head Model Types

Parametric head model arrays, per-frame coefficients and the canonical
configuration. A ``HeadModel`` is immutable after construction and is
shared read-only by every worker thread.
"""

from dataclasses import dataclass, field

import numpy as np

from core.errors import ContractError, DimensionError

PART_NAMES = ("scalp", "forehead", "eyes", "nose", "mouth", "jaw_chin", "neck")

WEIGHT_SUM_TOLERANCE = 1e-5


def _frozen(array: np.ndarray, dtype: type = np.float64) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class HeadModel:
    """
    Template mesh, kinematic tree, skinning weights and blendshape bases.

    Shapes: ``template_vertices`` [N_v, 3], ``faces`` [F, 3],
    ``joint_regressor`` [K, N_v], ``parent`` [K], ``blend_weights`` [N_v, K],
    ``shape_basis`` [N_v, 3, n_beta], ``pose_basis`` [N_v, 3, 9K],
    ``expr_basis`` [N_v, 3, n_psi], ``part_labels`` [N_v].
    """

    template_vertices: np.ndarray
    faces: np.ndarray
    joint_regressor: np.ndarray
    parent: np.ndarray
    blend_weights: np.ndarray
    shape_basis: np.ndarray
    pose_basis: np.ndarray
    expr_basis: np.ndarray
    part_labels: np.ndarray
    part_names: tuple[str, ...] = field(default=PART_NAMES)

    def __post_init__(self) -> None:
        for name in ("template_vertices", "joint_regressor", "blend_weights",
                     "shape_basis", "pose_basis", "expr_basis"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for name in ("faces", "parent", "part_labels"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.int64))
        n_parts = int(self.part_labels.max()) + 1 if self.part_labels.size else 0
        if len(self.part_names) < n_parts:
            names = tuple(f"part_{i}" for i in range(n_parts))
            object.__setattr__(self, "part_names", names)
        self.validate()

    # -- sizes ------------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.template_vertices.shape[0]

    @property
    def n_joints(self) -> int:
        return self.parent.shape[0]

    @property
    def n_shape(self) -> int:
        return self.shape_basis.shape[2]

    @property
    def n_expr(self) -> int:
        return self.expr_basis.shape[2]

    @property
    def n_pose(self) -> int:
        """Length of the axis-angle pose vector (global + one per joint)."""
        return 3 * (self.n_joints + 1)

    @property
    def n_parts(self) -> int:
        return len(self.part_names)

    # -- validation -------------------------------------------------------------

    def validate(self) -> None:
        """
        Check array shapes and model invariants.

        Raises:
            DimensionError: arrays of inconsistent sizes
            ContractError: weights not a partition of unity, invalid faces,
                cyclic joint tree, non-finite bases
        """
        n_v, k = self.n_vertices, self.n_joints
        expected = {
            "template_vertices": (n_v, 3),
            "joint_regressor": (k, n_v),
            "blend_weights": (n_v, k),
            "part_labels": (n_v,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise DimensionError(name, actual, shape)
        for name, width in (("shape_basis", None), ("pose_basis", 9 * k), ("expr_basis", None)):
            basis = getattr(self, name)
            if basis.ndim != 3 or basis.shape[:2] != (n_v, 3):
                raise DimensionError(name, basis.shape, (n_v, 3))
            if width is not None and basis.shape[2] != width:
                raise DimensionError(name, basis.shape, (n_v, 3, width))
            if not np.isfinite(basis).all():
                raise ContractError(f"{name} holds non-finite values")

        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise DimensionError("faces", self.faces.shape, (-1, 3))
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= n_v):
            raise ContractError("faces reference vertices outside the template")

        weights = self.blend_weights
        if (weights < 0).any():
            raise ContractError("blend weights must be non-negative")
        worst = np.abs(weights.sum(axis=1) - 1.0).max(initial=0.0)
        if worst > WEIGHT_SUM_TOLERANCE:
            raise ContractError(f"blend weight rows must sum to 1 (worst deviation {worst:.2e})")
        worst = np.abs(self.joint_regressor.sum(axis=1) - 1.0).max(initial=0.0)
        if worst > WEIGHT_SUM_TOLERANCE:
            raise ContractError(
                f"joint regressor rows must sum to 1 (worst deviation {worst:.2e})"
            )
        if (self.part_labels < 0).any():
            raise ContractError("part labels must be non-negative")
        joint_order(self.parent)

    # -- derived arrays -----------------------------------------------------------

    def to_arrays(self) -> dict[str, np.ndarray]:
        """Arrays under their file tensor names."""
        return {
            "template_vertices": self.template_vertices,
            "faces": self.faces,
            "joint_regressor": self.joint_regressor,
            "parent": self.parent,
            "blend_weights": self.blend_weights,
            "shape_basis": self.shape_basis,
            "pose_basis": self.pose_basis,
            "expr_basis": self.expr_basis,
            "part_labels": self.part_labels,
        }


def joint_order(parent: np.ndarray) -> list[int]:
    """
    Topological order of a joint tree (parents before children).

    Raises:
        ContractError: parent index out of range or a cycle
    """
    parent = np.asarray(parent, dtype=np.int64)
    k = parent.shape[0]
    if ((parent < -1) | (parent >= k)).any():
        raise ContractError(f"parent indices must lie in [-1, {k}), got {parent.tolist()}")
    order: list[int] = []
    placed = np.zeros(k, dtype=bool)
    while len(order) < k:
        progressed = False
        for j in range(k):
            if not placed[j] and (parent[j] < 0 or placed[parent[j]]):
                order.append(j)
                placed[j] = True
                progressed = True
        if not progressed:
            raise ContractError(f"joint tree has a cycle: {parent.tolist()}")
    return order


@dataclass(frozen=True, eq=False)
class PoseExpr:
    """Shape, pose (axis-angle, global first) and expression coefficients."""

    beta: np.ndarray
    theta: np.ndarray
    psi: np.ndarray

    def __post_init__(self) -> None:
        for name in ("beta", "theta", "psi"):
            object.__setattr__(self, name, _frozen(np.ravel(getattr(self, name))))
            if not np.isfinite(getattr(self, name)).all():
                raise ContractError(f"{name} holds non-finite values")
        if self.theta.size % 3:
            raise DimensionError("theta", self.theta.shape, (-1, 3))
        angles = np.linalg.norm(self.theta.reshape(-1, 3), axis=1)
        if (angles >= np.pi).any():
            raise ContractError(f"axis-angle magnitudes must be < pi, got {angles.max():.4f}")

    def check(self, model: HeadModel) -> None:
        """
        Raises:
            DimensionError: coefficient lengths differ from the model's bases
        """
        if self.beta.size != model.n_shape:
            raise DimensionError("beta", self.beta.shape, (model.n_shape,))
        if self.theta.size != model.n_pose:
            raise DimensionError("theta", self.theta.shape, (model.n_pose,))
        if self.psi.size != model.n_expr:
            raise DimensionError("psi", self.psi.shape, (model.n_expr,))

    @property
    def condition(self) -> np.ndarray:
        """Pose and expression concatenated, the input of the deformation networks."""
        return np.concatenate([self.theta, self.psi])

    @classmethod
    def zeros(cls, model: HeadModel) -> "PoseExpr":
        return cls(np.zeros(model.n_shape), np.zeros(model.n_pose), np.zeros(model.n_expr))

    def to_dict(self) -> dict[str, list[float]]:
        return {"beta": self.beta.tolist(), "theta": self.theta.tolist(), "psi": self.psi.tolist()}


@dataclass(frozen=True, eq=False)
class CanonicalConfig:
    """Average shape with zero pose and zero expression."""

    beta_avg: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta_avg", _frozen(np.ravel(self.beta_avg)))

    def pose_expr(self, model: HeadModel) -> PoseExpr:
        return PoseExpr(self.beta_avg, np.zeros(model.n_pose), np.zeros(model.n_expr))
