"""
FLAME-lite Generator

Builds a small parametric head with the same structure as the full
FLAME model: a deformed icosphere template, a neck and a jaw joint, four
shape and four expression blendshapes, pose correctives and seven part
labels.
"""

import logging

import numpy as np

from .model import PART_NAMES, HeadModel

logger = logging.getLogger(__name__)

NECK, JAW = 0, 1
N_SHAPE = 4
N_EXPR = 4


def smoothstep(edge0: float, edge1: float, value: np.ndarray) -> np.ndarray:
    """Hermite ramp from 0 at ``edge0`` to 1 at ``edge1`` (either order)."""
    t = np.clip((np.asarray(value, dtype=np.float64) - edge0) / (edge1 - edge0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def icosphere(subdivisions: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """
    Unit icosphere by repeated midpoint subdivision.

    Returns:
        Tuple of (vertices [N, 3], faces [F, 3])
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    vertices = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]

    for _ in range(subdivisions):
        midpoints: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in midpoints:
                m = vertices[a] + vertices[b]
                vertices.append(m / np.linalg.norm(m))
                midpoints[key] = len(vertices) - 1
            return midpoints[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined

    return np.array(vertices), np.array(faces, dtype=np.int64)


def _bump(x: np.ndarray, y: np.ndarray, cx: float, cy: float, sx: float, sy: float) -> np.ndarray:
    return np.exp(-(((x - cx) / sx) ** 2 + ((y - cy) / sy) ** 2))


def part_labels_for(unit: np.ndarray) -> np.ndarray:
    """Heuristic part label of each unit-sphere direction."""
    x, y, z = unit[:, 0], unit[:, 1], unit[:, 2]
    labels = np.full(len(unit), PART_NAMES.index("eyes"), dtype=np.int64)
    front = z >= 0.2
    labels[(y > 0.25) & front] = PART_NAMES.index("forehead")
    labels[(y > -0.2) & (y <= 0.0) & (np.abs(x) < 0.3) & front] = PART_NAMES.index("nose")
    labels[(y > -0.45) & (y <= -0.2) & front] = PART_NAMES.index("mouth")
    labels[(y > -0.7) & (y <= -0.45) & front] = PART_NAMES.index("jaw_chin")
    labels[(~front & (y > -0.7)) | (y > 0.55)] = PART_NAMES.index("scalp")
    labels[y <= -0.7] = PART_NAMES.index("neck")
    return labels


def build_flame_lite(seed: int = 0, subdivisions: int = 3) -> HeadModel:
    """
    Generate the FLAME-lite head model.

    The face looks along +z with +y up; the head spans roughly one scene
    unit. Joint 0 is the neck (root) and joint 1 the jaw.

    Args:
        seed: seed for the pose-corrective directions
        subdivisions: icosphere refinement level (3 gives 642 vertices)
    """
    rng = np.random.default_rng(seed)
    unit, faces = icosphere(subdivisions)
    x, y, z = unit[:, 0], unit[:, 1], unit[:, 2]
    facing = (z > 0).astype(np.float64)

    radial = 1.0 - 0.45 * smoothstep(-0.55, -0.9, y)
    nose = _bump(x, y, 0.0, -0.05, 0.12, 0.15) * facing
    chin = _bump(x, y, 0.0, -0.45, 0.3, 0.1) * facing
    template = np.stack(
        [
            0.40 * radial * x,
            0.52 * y - 0.25 * smoothstep(-0.6, -1.0, y),
            0.45 * radial * z + 0.08 * nose + 0.03 * chin,
        ],
        axis=1,
    )
    n_v = len(template)

    regressor = np.zeros((2, n_v))
    regressor[NECK, np.argsort(y)[:12]] = 1.0 / 12
    hinge = []
    for side in (-1.0, 1.0):
        target = np.array([side, -0.1, 0.0])
        hinge.extend(np.argsort(np.linalg.norm(unit - target, axis=1))[:4].tolist())
    regressor[JAW, hinge] = 1.0 / len(hinge)

    jaw = (
        smoothstep(-0.15, -0.35, y)
        * smoothstep(-0.1, 0.3, z)
        * (1.0 - smoothstep(-0.65, -0.8, y))
    )
    weights = np.stack([1.0 - jaw, jaw], axis=1)

    shape_basis = np.zeros((n_v, 3, N_SHAPE))
    shape_basis[:, 0, 0] = 0.1 * template[:, 0]
    shape_basis[:, 1, 1] = 0.1 * template[:, 1]
    shape_basis[:, 2, 2] = 0.1 * template[:, 2]
    shape_basis[:, 2, 3] = 0.05 * nose

    lower_lip = _bump(x, y, 0.0, -0.38, 0.3, 0.1) * facing
    corners = _bump(np.abs(x), y, 0.3, -0.3, 0.1, 0.08) * facing
    brows = _bump(np.abs(x), y, 0.3, 0.3, 0.2, 0.08) * facing
    cheeks = _bump(np.abs(x), y, 0.55, -0.15, 0.15, 0.15) * facing
    expr_basis = np.zeros((n_v, 3, N_EXPR))
    expr_basis[:, 1, 0] = -0.04 * lower_lip
    expr_basis[:, 0, 1] = 0.02 * np.sign(x) * corners
    expr_basis[:, 1, 1] = 0.015 * corners
    expr_basis[:, 1, 2] = 0.02 * brows
    expr_basis[:, :, 3] = 0.02 * cheeks[:, None] * unit

    directions = rng.normal(size=(18, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    neck_region = smoothstep(-0.5, -0.8, y)
    region = np.concatenate([np.repeat(neck_region[:, None], 9, 1), np.repeat(jaw[:, None], 9, 1)], 1)
    pose_basis = 0.005 * region[:, None, :] * directions.T[None, :, :]

    model = HeadModel(
        template_vertices=template,
        faces=faces,
        joint_regressor=regressor,
        parent=np.array([-1, NECK]),
        blend_weights=weights,
        shape_basis=shape_basis,
        pose_basis=pose_basis,
        expr_basis=expr_basis,
        part_labels=part_labels_for(unit),
    )
    logger.debug(f"Built FLAME-lite head with {n_v} vertices and {len(faces)} faces")
    return model
