"""
Global Field Deformer

One deformation network for the whole head, widened until its parameter
count matches the part-based field it is compared against. Part labels
and assignment are accepted but ignored: every point belongs to a single
part.
"""

from typing import Any

import numpy as np

from core.autodiff import MLP, Tensor, ops, prefixed
from core.interfaces.deformer import Deformer


def mlp_parameter_count(in_features: int, width: int, depth: int, out_features: int) -> int:
    widths = [in_features, *([width] * depth), out_features]
    return sum(a * b + b for a, b in zip(widths[:-1], widths[1:], strict=True))


def matched_width(in_features: int, depth: int, target: int) -> int:
    """Hidden width whose single offset network is closest to ``target`` parameters."""
    best, best_gap = 1, None
    for width in range(1, 4097):
        gap = abs(mlp_parameter_count(in_features, width, depth, 3) - target)
        if best_gap is None or gap < best_gap:
            best, best_gap = width, gap
        elif gap > best_gap:
            break
    return best


class GlobalFieldDeformer(Deformer):
    """Single bounded offset network on ``[PE(x'), theta, psi]``."""

    def __init__(self, config: dict | None, cond_dim: int, rng: np.random.Generator):
        super().__init__(config, cond_dim, rng)
        self.name = "global_field"
        local_cfg = self.config.get("local_net", {})
        assigner_cfg = self.config.get("assigner", {})
        depth = int(local_cfg.get("depth", 4))
        width = self.config.get("width")
        if width is None:
            target = self.n_parts * mlp_parameter_count(
                self.input_dim, int(local_cfg.get("width", 64)), depth, 3
            ) + mlp_parameter_count(
                self.input_dim,
                int(assigner_cfg.get("width", 64)),
                int(assigner_cfg.get("depth", 4)),
                self.n_parts,
            )
            width = matched_width(self.input_dim, depth, target)
        self.width = int(width)
        self.net = MLP(self.input_dim, [self.width] * depth, 3, rng,
                       activation=self.config.get("activation", "softplus"),
                       zero_output=True, name="global")

    def assigner_parameters(self) -> dict[str, Tensor]:
        return {}

    def local_parameters(self) -> dict[str, Tensor]:
        return prefixed("global", self.net.named_parameters())

    def assign_parts(self, x: Any, cond: np.ndarray) -> Tensor:
        encoded = self.encode(x, cond)
        return Tensor(np.ones((encoded.shape[0], 1)))

    def part_deform(self, x: Any, cond: np.ndarray) -> Tensor:
        return self.bound(self.net(self.encode(x, cond)))

    def hard_part_deform(self, x: Any, cond: np.ndarray, labels: np.ndarray) -> Tensor:
        return self.part_deform(x, cond)
