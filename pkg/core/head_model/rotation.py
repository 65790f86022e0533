"""Axis-angle rotations."""

import numpy as np


def rodrigues(rotvecs: np.ndarray) -> np.ndarray:
    """
    Rotation matrices from axis-angle vectors.

    Args:
        rotvecs: [..., 3] axis times angle (radians)

    Returns:
        [..., 3, 3] rotation matrices
    """
    rotvecs = np.asarray(rotvecs, dtype=np.float64)
    angle = np.linalg.norm(rotvecs, axis=-1, keepdims=True)
    safe = np.where(angle > 1e-12, angle, 1.0)
    axis = rotvecs / safe
    x, y, z = axis[..., 0], axis[..., 1], axis[..., 2]
    zero = np.zeros_like(x)
    skew = np.stack(
        [zero, -z, y, z, zero, -x, -y, x, zero], axis=-1
    ).reshape(*rotvecs.shape[:-1], 3, 3)
    sin = np.sin(angle)[..., None]
    cos = np.cos(angle)[..., None]
    eye = np.broadcast_to(np.eye(3), skew.shape)
    rot = eye + sin * skew + (1.0 - cos) * (skew @ skew)
    return np.where((angle > 1e-12)[..., None], rot, eye)


def rigid(rotation: np.ndarray, translation: np.ndarray) -> np.ndarray:
    """Assemble [..., 4, 4] homogeneous transforms."""
    rotation = np.asarray(rotation, dtype=np.float64)
    out = np.zeros((*rotation.shape[:-2], 4, 4))
    out[..., :3, :3] = rotation
    out[..., :3, 3] = translation
    out[..., 3, 3] = 1.0
    return out
