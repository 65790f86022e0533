"""
Pinhole Camera

Intrinsics plus a rigid world-from-camera pose. Camera axes follow the
OpenCV convention (+x right, +y down, +z forward) and pixel (u, v) has its
center at (u, v).
"""

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from core.errors import ContractError, DimensionError

ORTHONORMAL_TOLERANCE = 1e-5


@dataclass(eq=False)
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    world_from_camera: np.ndarray = field(default_factory=lambda: np.eye(4))
    width: int = 128
    height: int = 128

    def __post_init__(self) -> None:
        self.world_from_camera = np.asarray(self.world_from_camera, dtype=np.float64).reshape(4, 4)
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            ContractError: non-positive focal lengths or image size, or a
                non-orthonormal rotation block
        """
        if self.fx <= 0 or self.fy <= 0:
            raise ContractError(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if self.width <= 0 or self.height <= 0:
            raise ContractError(f"image size must be positive, got {self.width}x{self.height}")
        rot = self.rotation
        error = np.abs(rot.T @ rot - np.eye(3)).max()
        if error > ORTHONORMAL_TOLERANCE:
            raise ContractError(f"camera rotation is not orthonormal (error {error:.2e})")

    @property
    def rotation(self) -> np.ndarray:
        return self.world_from_camera[:3, :3]

    @property
    def center(self) -> np.ndarray:
        return self.world_from_camera[:3, 3].copy()

    def pixel_grid(self) -> np.ndarray:
        """All pixels as (u, v) rows in row-major image order [H·W, 2]."""
        v, u = np.meshgrid(np.arange(self.height), np.arange(self.width), indexing="ij")
        return np.stack([u.reshape(-1), v.reshape(-1)], axis=1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "fx": float(self.fx),
            "fy": float(self.fy),
            "cx": float(self.cx),
            "cy": float(self.cy),
            "world_from_camera": self.world_from_camera.reshape(-1).tolist(),
            "width": int(self.width),
            "height": int(self.height),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Camera":
        return cls(
            fx=float(data["fx"]),
            fy=float(data["fy"]),
            cx=float(data["cx"]),
            cy=float(data["cy"]),
            world_from_camera=np.asarray(data["world_from_camera"], dtype=np.float64),
            width=int(data["width"]),
            height=int(data["height"]),
        )


def look_at(eye: Any, target: Any = (0.0, 0.0, 0.0), up: Any = (0.0, 1.0, 0.0)) -> np.ndarray:
    """World-from-camera transform of a camera at ``eye`` facing ``target``."""
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=np.float64))
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    pose = np.eye(4)
    pose[:3, :3] = np.stack([right, down, forward], axis=1)
    pose[:3, 3] = eye
    return pose


def orbit_camera(
    distance: float,
    azimuth: float,
    elevation: float,
    width: int,
    height: int,
    fov_degrees: float = 40.0,
    target: Any = (0.0, -0.1, 0.0),
) -> Camera:
    """Camera on a sphere around ``target``; azimuth 0 looks at the face (+z side)."""
    target = np.asarray(target, dtype=np.float64)
    offset = distance * np.array(
        [
            np.sin(azimuth) * np.cos(elevation),
            np.sin(elevation),
            np.cos(azimuth) * np.cos(elevation),
        ]
    )
    focal = 0.5 * width / np.tan(np.radians(fov_degrees) / 2.0)
    return Camera(
        fx=focal,
        fy=focal,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        world_from_camera=look_at(target + offset, target),
        width=width,
        height=height,
    )


def generate_rays(camera: Camera, pixels: Any) -> tuple[np.ndarray, np.ndarray]:
    """
    World-space rays through pixel centers.

    Args:
        pixels: [P, 2] integer (u, v) coordinates

    Returns:
        Tuple of (origins [P, 3], unit directions [P, 3])

    Raises:
        ContractError: a pixel outside the image
    """
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    if pixels.shape[1] != 2:
        raise DimensionError("generate_rays", pixels.shape, (-1, 2))
    u, v = pixels[:, 0], pixels[:, 1]
    outside = (u < 0) | (u > camera.width - 1) | (v < 0) | (v > camera.height - 1)
    if outside.any():
        first = pixels[np.argmax(outside)]
        raise ContractError(
            f"pixel ({first[0]:g}, {first[1]:g}) outside {camera.width}x{camera.height} image"
        )
    local = np.stack(
        [(u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, np.ones_like(u)], axis=1
    )
    directions = local @ camera.rotation.T
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    origins = np.broadcast_to(camera.center, directions.shape).copy()
    return origins, directions
