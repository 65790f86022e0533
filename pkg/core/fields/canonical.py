"""
Canonical Field

Occupancy and color networks living in canonical space. Color sees the
occupancy network's last hidden features, the surface normal and the
encoded view direction.
"""

from typing import Any

import numpy as np

from core.autodiff import MLP, ParameterSet, Tensor, ops, prefixed

from .occupancy import OccupancyField, as_points, check_directions


class CanonicalField(OccupancyField, ParameterSet):
    """
    ``(o, c) = F_c(x^c)`` with ``o = sigmoid(occupancy_net(PE(x^c)))``.

    The occupancy output bias starts at -1 (o ≈ 0.27 everywhere).
    """

    def __init__(
        self,
        rng: np.random.Generator,
        occupancy_depth: int = 8,
        occupancy_width: int = 128,
        position_freqs: int = 10,
        color_depth: int = 4,
        color_width: int = 128,
        direction_freqs: int = 4,
        fd_step: float = 1e-3,
        occupancy_bias: float = -1.0,
        activation: str = "softplus",
    ):
        self.position_freqs = position_freqs
        self.direction_freqs = direction_freqs
        self.fd_step = fd_step
        self.occupancy_net = MLP(
            3 * (1 + 2 * position_freqs),
            [occupancy_width] * occupancy_depth,
            1,
            rng,
            activation=activation,
            output_bias=occupancy_bias,
            name="occupancy",
        )
        self.color_net = MLP(
            occupancy_width + 3 + 3 * (1 + 2 * direction_freqs),
            [color_width] * color_depth,
            3,
            rng,
            activation=activation,
            name="color",
        )

    @classmethod
    def from_config(cls, config: dict, rng: np.random.Generator) -> "CanonicalField":
        return cls(rng, **config)

    def named_parameters(self) -> dict[str, Tensor]:
        return {
            **prefixed("occupancy", self.occupancy_net.named_parameters()),
            **prefixed("color", self.color_net.named_parameters()),
        }

    def occupancy_and_feature(self, x: Tensor) -> tuple[Tensor, Tensor]:
        points = as_points(x)
        logits, feature = self.occupancy_net.forward_with_features(
            ops.positional_encoding(points, self.position_freqs)
        )
        return ops.sigmoid(ops.reshape(logits, (points.shape[0],))), feature

    def color(self, x: Any, n: Any, d: Any, feature: Tensor | None = None) -> Tensor:
        """
        RGB in [0, 1] for canonical points, unit normals and view directions.

        Args:
            x: [M, 3] canonical points
            n: [M, 3] unit normals
            d: [M, 3] or [3] unit view directions
            feature: occupancy features of ``x`` when already computed
        """
        points = as_points(x)
        if feature is None:
            feature = self.occupancy_and_feature(points)[1]
        m = points.shape[0]
        normals = n if isinstance(n, Tensor) else Tensor(np.asarray(n).reshape(m, 3))
        directions = check_directions(d, m)
        encoded_dir = ops.positional_encoding(directions, self.direction_freqs)
        inputs = ops.concat([feature, normals, encoded_dir], axis=1)
        return ops.sigmoid(self.color_net(inputs))
