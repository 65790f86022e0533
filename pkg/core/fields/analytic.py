"""
Analytic Fields

Closed-form occupancy fields used as ground truth: simple shapes for
checking normals and surface location, and a posed head assembled from
ellipsoids attached to the head model's joints for synthetic datasets.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from core.autodiff import Tensor, ops
from core.head_model import HeadModel, PoseExpr, joint_transforms
from core.head_model.flame_lite import JAW, NECK

from .occupancy import OccupancyField, as_points, check_directions

LIGHT_DIRECTION = np.array([0.3, 0.5, 1.0]) / np.linalg.norm([0.3, 0.5, 1.0])


def shade(albedo: Any, n: Any, ambient: float = 0.35) -> Tensor:
    """Lambert shading with a fixed light; ``n`` points into the surface."""
    normals = n if isinstance(n, Tensor) else Tensor(np.asarray(n).reshape(-1, 3))
    facing = ops.relu(ops.matmul(normals, -LIGHT_DIRECTION[:, None]))
    return albedo * (facing * (1.0 - ambient) + ambient)


class SphereField(OccupancyField):
    """``o = sigmoid(sharpness · (R − ‖x − center‖))``."""

    def __init__(self, radius: float, sharpness: float = 10.0, center: Any = (0, 0, 0),
                 albedo: Any = (0.8, 0.6, 0.5), fd_step: float = 1e-3):
        self.radius = radius
        self.sharpness = sharpness
        self.center = np.asarray(center, dtype=np.float64)
        self.albedo = np.asarray(albedo, dtype=np.float64)
        self.fd_step = fd_step

    def occupancy_and_feature(self, x: Tensor) -> tuple[Tensor, None]:
        distance = ops.norm(as_points(x) - self.center, axis=1)
        return ops.sigmoid((self.radius - distance) * self.sharpness), None

    def color(self, x: Any, n: Any, d: Any, feature: Tensor | None = None) -> Tensor:
        return shade(self.albedo, n)


class PlaneField(OccupancyField):
    """Half-space ``n·x < offset`` with a sigmoid ramp of the given sharpness."""

    def __init__(self, normal: Any = (0, 0, 1), offset: float = 0.0, sharpness: float = 10.0,
                 albedo: Any = (0.6, 0.6, 0.6), fd_step: float = 1e-3):
        unit = np.asarray(normal, dtype=np.float64)
        self.plane_normal = unit / np.linalg.norm(unit)
        self.offset = offset
        self.sharpness = sharpness
        self.albedo = np.asarray(albedo, dtype=np.float64)
        self.fd_step = fd_step

    def occupancy_and_feature(self, x: Tensor) -> tuple[Tensor, None]:
        height = ops.matmul(as_points(x), self.plane_normal[:, None])
        return ops.sigmoid(ops.reshape(height, (-1,)) * -self.sharpness + self.offset * self.sharpness), None

    def color(self, x: Any, n: Any, d: Any, feature: Tensor | None = None) -> Tensor:
        return shade(self.albedo, n)


class ConstantField(OccupancyField):
    """Same occupancy and color everywhere."""

    def __init__(self, value: float = 0.0, rgb: Any = (0.5, 0.5, 0.5)):
        self.value = value
        self.rgb = np.asarray(rgb, dtype=np.float64)

    def occupancy_and_feature(self, x: Tensor) -> tuple[Tensor, None]:
        points = as_points(x)
        return points[:, 0] * 0.0 + self.value, None

    def color(self, x: Any, n: Any, d: Any, feature: Tensor | None = None) -> Tensor:
        m = as_points(x).shape[0]
        return Tensor(np.broadcast_to(self.rgb, (m, 3)))


@dataclass(frozen=True)
class Ellipsoid:
    center: tuple[float, float, float]
    radii: tuple[float, float, float]
    joint: int
    albedo: tuple[float, float, float]


SKIN = (0.86, 0.66, 0.56)


def head_primitives(psi: np.ndarray) -> list[Ellipsoid]:
    """
    Ellipsoids of the analytic head in canonical coordinates.

    Expression coefficients open the mouth (psi[0]), widen the lips
    (psi[1]), raise the brows (psi[2]) and puff the cheeks (psi[3]).
    """
    psi = np.zeros(4) if psi.size < 4 else psi
    open_mouth, widen, brows, puff = (float(v) for v in psi[:4])
    primitives = [
        Ellipsoid((0.0, 0.05, -0.02), (0.40, 0.47, 0.44), NECK, SKIN),
        Ellipsoid((0.0, 0.14, -0.06), (0.42, 0.40, 0.44), NECK, (0.25, 0.16, 0.10)),
        Ellipsoid((0.0, -0.12, 0.08), (0.33 * (1.0 + 0.08 * puff), 0.30, 0.36), NECK, SKIN),
        Ellipsoid((0.0, -0.03, 0.43), (0.06, 0.10, 0.08), NECK, (0.90, 0.60, 0.50)),
        Ellipsoid((0.0, -0.33, 0.14), (0.24, 0.15, 0.26), JAW, SKIN),
        Ellipsoid(
            (0.0, -0.24 - 0.02 * open_mouth, 0.38),
            (0.11 + 0.02 * widen, 0.03 + 0.015 * abs(open_mouth), 0.05),
            JAW,
            (0.75, 0.25, 0.30),
        ),
        Ellipsoid((0.0, -0.62, -0.03), (0.21, 0.32, 0.21), NECK, (0.80, 0.60, 0.50)),
    ]
    for side in (-1.0, 1.0):
        primitives.append(Ellipsoid((0.14 * side, 0.08, 0.37), (0.055, 0.04, 0.04), NECK,
                                    (0.10, 0.10, 0.15)))
        primitives.append(Ellipsoid((0.14 * side, 0.17 + 0.02 * brows, 0.39),
                                    (0.08, 0.018, 0.03), NECK, (0.20, 0.12, 0.08)))
    return primitives


class AnalyticHeadField(OccupancyField):
    """
    Posed-space head made of joint-attached ellipsoids.

    Each ellipsoid follows its joint's skinning transform for the frame;
    the ellipsoids are merged with a smooth maximum and colored by a
    softmax blend of their albedos, shaded with a fixed light.
    """

    def __init__(self, model: HeadModel, pe: PoseExpr, sharpness: float = 60.0,
                 blend: float = 16.0, fd_step: float = 1e-3):
        pe.check(model)
        self.sharpness = sharpness
        self.blend = blend
        self.fd_step = fd_step
        self.primitives = head_primitives(pe.psi)
        transforms = joint_transforms(model, pe.beta, pe.theta)
        self.inverse = np.linalg.inv(transforms)
        self.albedos = np.array([p.albedo for p in self.primitives])

    def _levels(self, x: Tensor) -> Tensor:
        """Per-primitive level ``1 − ‖(q − c)/r‖`` [M, P]; positive inside."""
        points = as_points(x)
        local = {}
        levels = []
        for p in self.primitives:
            if p.joint not in local:
                inv = self.inverse[p.joint]
                local[p.joint] = ops.matmul(points, inv[:3, :3].T) + inv[:3, 3]
            scaled = (local[p.joint] - np.asarray(p.center)) / np.asarray(p.radii)
            levels.append(1.0 - ops.norm(scaled, axis=1))
        return ops.stack(levels, axis=1)

    def occupancy_and_feature(self, x: Tensor) -> tuple[Tensor, Tensor]:
        levels = self._levels(x)
        merged = ops.logsumexp(levels * self.blend, axis=1) * (1.0 / self.blend)
        return ops.sigmoid(merged * self.sharpness), levels

    def color(self, x: Any, n: Any, d: Any, feature: Tensor | None = None) -> Tensor:
        levels = feature if feature is not None else self._levels(as_points(x))
        weights = ops.softmax(levels * self.blend, axis=1)
        albedo = ops.matmul(weights, self.albedos)
        check_directions(d, albedo.shape[0])
        return shade(albedo, n)
