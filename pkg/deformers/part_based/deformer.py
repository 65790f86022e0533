"""
Part-Based Deformer

N small local deformation networks aggregated by the probabilities of an
adaptive part assigner. Freshly built fields are neutral: the assigner
starts uniform and every local net starts at a zero offset.
"""

from typing import Any

import numpy as np

from core.autodiff import MLP, Tensor, ops, prefixed
from core.errors import ContractError
from core.interfaces.deformer import Deformer


class PartBasedDeformer(Deformer):
    """
    Soft mixture of per-part offset networks.

    ``part_deform(x', c) = sum_i S_i(x', c) · D_i(x', c)`` where ``S`` is the
    softmax of the assigner logits and each ``D_i`` is bounded by
    ``offset_scale · tanh``.
    """

    def __init__(self, config: dict | None, cond_dim: int, rng: np.random.Generator):
        super().__init__(config, cond_dim, rng)
        self.name = "part_based"
        local_cfg = self.config.get("local_net", {})
        assigner_cfg = self.config.get("assigner", {})
        activation = self.config.get("activation", "softplus")

        local_hidden = [int(local_cfg.get("width", 64))] * int(local_cfg.get("depth", 4))
        self.local_nets = [
            MLP(self.input_dim, local_hidden, 3, rng, activation=activation,
                zero_output=True, name=f"local.{i}")
            for i in range(self.n_parts)
        ]
        assigner_hidden = [int(assigner_cfg.get("width", 64))] * int(assigner_cfg.get("depth", 4))
        self.assigner = MLP(self.input_dim, assigner_hidden, self.n_parts, rng,
                            activation=activation, zero_output=True, name="assigner")

    def assigner_parameters(self) -> dict[str, Tensor]:
        return prefixed("assigner", self.assigner.named_parameters())

    def local_parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for i, net in enumerate(self.local_nets):
            params.update(prefixed(f"local.{i}", net.named_parameters()))
        return params

    def _check_part(self, index: int) -> None:
        if not 0 <= index < self.n_parts:
            raise ContractError(f"part index {index} outside [0, {self.n_parts})")

    def part_logits(self, x: Any, cond: np.ndarray) -> Tensor:
        return self.assigner(self.encode(x, cond))

    def assign_parts(self, x: Any, cond: np.ndarray) -> Tensor:
        return ops.softmax(self.part_logits(x, cond), axis=-1)

    def local_offset(self, index: int, x: Any, cond: np.ndarray) -> Tensor:
        """
        Offset of one local network [M, 3].

        Raises:
            ContractError: index outside [0, n_parts)
        """
        self._check_part(index)
        return self.bound(self.local_nets[index](self.encode(x, cond)))

    def _all_offsets(self, encoded: Tensor) -> Tensor:
        return ops.stack([self.bound(net(encoded)) for net in self.local_nets], axis=1)

    def aggregate(self, probabilities: Tensor, offsets: Tensor) -> Tensor:
        """Weighted sum over parts of [M, P, 3] offsets with [M, P] weights."""
        weights = ops.reshape(probabilities, (*probabilities.shape, 1))
        return ops.sum(offsets * weights, axis=1)

    def part_deform(self, x: Any, cond: np.ndarray) -> Tensor:
        encoded = self.encode(x, cond)
        probabilities = ops.softmax(self.assigner(encoded), axis=-1)
        return self.aggregate(probabilities, self._all_offsets(encoded))

    def hard_part_deform(self, x: Any, cond: np.ndarray, labels: np.ndarray) -> Tensor:
        """
        Offsets from each point's labelled local net only.

        Points are grouped by label so every network sees just its own
        points; the groups are put back in input order afterwards.

        Raises:
            ContractError: a label outside [0, n_parts)
        """
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        encoded = self.encode(x, cond)
        if labels.shape[0] != encoded.shape[0]:
            raise ContractError(
                f"got {labels.shape[0]} labels for {encoded.shape[0]} points"
            )
        if labels.size == 0:
            return self.bound(self.local_nets[0](encoded))
        parts = np.unique(labels)
        for part in parts:
            self._check_part(int(part))
        groups = [np.flatnonzero(labels == part) for part in parts]
        outputs = [
            self.bound(self.local_nets[int(part)](ops.take(encoded, group)))
            for part, group in zip(parts, groups, strict=True)
        ]
        order = np.concatenate(groups)
        return ops.take(ops.concat(outputs, axis=0), np.argsort(order))
