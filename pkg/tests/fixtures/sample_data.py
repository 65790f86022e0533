"""
Sample models, configurations and oracles for testing.
"""

from typing import Any

import numpy as np

from core.head_model import HeadModel, PoseExpr, rodrigues


def create_tiny_config_data(**sections: Any) -> dict[str, Any]:
    """
    Project configuration small enough to train and render in a test.

    Keyword arguments replace whole sections.
    """
    data: dict[str, Any] = {
        "seed": 0,
        "workers": 1,
        "logging": {"level": "WARNING"},
        "synthetic": {
            "seed": 0,
            "n_frames": 4,
            "width": 16,
            "height": 16,
            "subdivisions": 1,
            "n_samples": 16,
            "test_fraction": 0.25,
        },
        "deformer": {
            "encoding_freqs": 2,
            "local_net": {"depth": 1, "width": 8},
            "assigner": {"depth": 1, "width": 8},
        },
        "canonical": {
            "occupancy_depth": 2,
            "occupancy_width": 16,
            "position_freqs": 2,
            "color_depth": 1,
            "color_width": 8,
            "direction_freqs": 1,
        },
        "render": {"n_samples": 8, "chunk": 64},
        "train": {
            "total_steps": 6,
            "stage1_fraction": 0.34,
            "distill_steps": 2,
            "lr_start": 1e-3,
            "lr_end": 1e-4,
            "rays_per_item": 16,
            "batch_items": 2,
            "ray_chunk": 8,
            "distill_points": 64,
            "checkpoint_every": 0,
            "progress": False,
        },
        "eval": {"split": "test", "save_renders": True},
    }
    data.update(sections)
    return data


def create_chain_model(jaw_weight: float = 0.5) -> HeadModel:
    """
    Four-vertex model with a two-joint chain and zero blendshapes.

    Vertex 0 sits on the root joint, vertex 1 on the child joint; vertices
    2 and 3 are skinned to both joints with ``jaw_weight`` on the child.
    """
    vertices = np.array([
        [0.0, -0.5, 0.0],
        [0.0, -0.1, 0.1],
        [0.2, -0.3, 0.2],
        [-0.1, 0.2, 0.3],
    ])
    regressor = np.zeros((2, 4))
    regressor[0, 0] = 1.0
    regressor[1, 1] = 1.0
    weights = np.array([
        [1.0, 0.0],
        [0.0, 1.0],
        [1.0 - jaw_weight, jaw_weight],
        [1.0 - jaw_weight, jaw_weight],
    ])
    return HeadModel(
        template_vertices=vertices,
        faces=np.array([[0, 1, 2], [1, 2, 3]]),
        joint_regressor=regressor,
        parent=np.array([-1, 0]),
        blend_weights=weights,
        shape_basis=np.zeros((4, 3, 1)),
        pose_basis=np.zeros((4, 3, 18)),
        expr_basis=np.zeros((4, 3, 1)),
        part_labels=np.array([0, 1, 1, 0]),
    )


def naive_chain_skinning(model: HeadModel, pe: PoseExpr) -> np.ndarray:
    """
    Skin a blendshape-free two-joint chain by explicit matrix composition,
    one vertex at a time.
    """
    def translate(t: np.ndarray) -> np.ndarray:
        out = np.eye(4)
        out[:3, 3] = t
        return out

    def rotate(r: np.ndarray) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = r
        return out

    rots = rodrigues(pe.theta.reshape(-1, 3))
    joints = model.joint_regressor @ model.template_vertices
    root = translate(joints[0]) @ rotate(rots[1]) @ translate(-joints[0])
    child = root @ translate(joints[1]) @ rotate(rots[2]) @ translate(-joints[1])
    globals_ = [rotate(rots[0]) @ root, rotate(rots[0]) @ child]

    posed = np.zeros_like(model.template_vertices)
    for i, v in enumerate(model.template_vertices):
        homogeneous = np.append(v, 1.0)
        for k in range(2):
            posed[i] += model.blend_weights[i, k] * (globals_[k] @ homogeneous)[:3]
    return posed


def random_pose_expr(model: HeadModel, rng: np.random.Generator, scale: float = 0.2) -> PoseExpr:
    return PoseExpr(
        rng.normal(0.0, 0.5, model.n_shape),
        rng.uniform(-scale, scale, model.n_pose),
        rng.uniform(-1.0, 1.0, model.n_expr),
    )


def bounded_rotations(rng: np.random.Generator, size: int, max_angle: float) -> np.ndarray:
    """``size // 3`` axis-angle vectors, random axes, angles uniform in [0, max_angle]."""
    axes = rng.normal(size=(size // 3, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    return (axes * rng.uniform(0.0, max_angle, (size // 3, 1))).reshape(-1)


def naive_encoding(x: np.ndarray, n_freqs: int) -> np.ndarray:
    """``[x, sin(2^k πx), cos(2^k πx)]`` built octave by octave."""
    blocks = [x]
    for k in range(n_freqs):
        blocks += [np.sin(2.0**k * np.pi * x), np.cos(2.0**k * np.pi * x)]
    return np.concatenate(blocks, axis=-1)


def naive_mlp(mlp: Any, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Softplus network evaluated with plain numpy from an MLP's weights.

    Returns:
        Tuple of (output, last hidden activations)
    """
    h = np.asarray(x, dtype=np.float64)
    layers = list(zip(mlp.weights, mlp.biases, strict=True))
    for w, b in layers[:-1]:
        h = np.logaddexp(0.0, h @ np.asarray(w.data, dtype=np.float64).T + b.data)
    w, b = layers[-1]
    return h @ np.asarray(w.data, dtype=np.float64).T + b.data, h


def randomize(params: Any, rng: np.random.Generator, scale: float = 0.5) -> None:
    """Overwrite every parameter with normal noise (in place)."""
    for p in params.parameters():
        p.data[...] = rng.normal(0.0, scale, p.shape)


def plant_surface(field: Any, direction: np.ndarray, sharpness: float = 4.0, gain: float = 8.0) -> None:
    """
    Rewire one neuron per occupancy layer so the field rises through 0.5
    near the plane ``direction · x = 0`` (in place).

    Hidden unit 0 of the first layer reads ``sharpness · direction · x``
    from the raw coordinates of the encoding and later hidden layers pass it
    through; the remaining output weights are damped.
    """
    net = field.occupancy_net
    weights, biases = net.weights, net.biases
    weights[0].data[0] = 0.0
    weights[0].data[0, :3] = sharpness * np.asarray(direction, dtype=np.float64)
    biases[0].data[0] = 0.0
    level = np.log1p(np.exp(0.0))
    for w, b in zip(weights[1:-1], biases[1:-1], strict=True):
        w.data[0] = 0.0
        w.data[0, 0] = 1.0
        b.data[0] = 0.0
        level = np.log1p(np.exp(level))
    weights[-1].data[0] *= 0.2
    weights[-1].data[0, 0] = gain
    biases[-1].data[0] = -gain * level
