"""
Tape Module

Append-only record of primitive operations and the reverse pass over it.
A tape is rebuilt for every training step; each worker thread owns a
private tape, which is why the active tape lives in a context variable.
"""

from collections.abc import Callable, Iterable, Sequence
from contextvars import ContextVar, Token
from dataclasses import dataclass

import numpy as np

from core.errors import ContractError

from .tensor import Tensor, storage_dtype

VJP = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_active_tape: ContextVar["Tape | None"] = ContextVar("active_tape", default=None)


def current_tape() -> "Tape | None":
    """Return the tape operations are currently recorded on, if any."""
    return _active_tape.get()


@dataclass(slots=True)
class Node:
    """One recorded primitive: its parents precede it on the tape."""

    op: str
    parents: tuple[int | None, ...]
    vjp: VJP | None
    shape: tuple[int, ...]


class Tape:
    """
    Recorder for reverse-mode differentiation.

    Usage::

        with Tape() as tape:
            loss = model_loss(params)
        grads = tape.backward(loss, params)
    """

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self._leaf_index: dict[int, int] = {}
        self._leaves: list[Tensor] = []
        self._token: Token | None = None

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        if self._token is not None:
            _active_tape.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self.nodes)

    # -- recording ------------------------------------------------------------

    def index_of(self, tensor: Tensor) -> int | None:
        """
        Return the node index of a tensor on this tape.

        Leaves that require gradients are registered on first use; constants
        and tensors recorded on another tape return None.
        """
        if tensor._tape is self:
            return tensor._node
        if tensor.requires_grad and tensor._tape is None:
            key = id(tensor)
            if key not in self._leaf_index:
                self._leaf_index[key] = len(self.nodes)
                self._leaves.append(tensor)
                self.nodes.append(Node("leaf", (), None, tensor.shape))
            return self._leaf_index[key]
        return None

    def record(
        self, op: str, parents: Sequence[int | None], vjp: VJP, shape: tuple[int, ...]
    ) -> int:
        """Append a primitive and return its node index."""
        self.nodes.append(Node(op, tuple(parents), vjp, shape))
        return len(self.nodes) - 1

    @property
    def leaves(self) -> list[Tensor]:
        return list(self._leaves)

    # -- reverse pass ---------------------------------------------------------

    def backward(
        self, loss: Tensor, params: Iterable[Tensor] | None = None
    ) -> dict[Tensor, np.ndarray]:
        """
        Compute gradients of a scalar loss.

        Args:
            loss: one-element tensor recorded on this tape
            params: tensors to report gradients for; defaults to every leaf
                registered on the tape. Tensors not on the path get zeros.

        Returns:
            Mapping from tensor to its 64-bit gradient array
        """
        if loss.size != 1:
            raise ContractError(
                f"backward requires a scalar loss, got shape {loss.shape}"
            )
        wanted = list(params) if params is not None else self.leaves
        if loss._tape is not self:
            return {p: np.zeros(p.shape, dtype=np.float64) for p in wanted}

        grads: list[np.ndarray | None] = [None] * len(self.nodes)
        grads[loss._node] = np.ones(loss.shape, dtype=np.float64)

        for index in range(loss._node, -1, -1):
            grad = grads[index]
            node = self.nodes[index]
            if grad is None or node.vjp is None:
                continue
            parent_grads = node.vjp(grad)
            for parent, parent_grad in zip(node.parents, parent_grads, strict=True):
                if parent is None or parent_grad is None:
                    continue
                if grads[parent] is None:
                    grads[parent] = parent_grad
                else:
                    grads[parent] = grads[parent] + parent_grad
            if index != loss._node:
                grads[index] = None

        result: dict[Tensor, np.ndarray] = {}
        for param in wanted:
            idx = self._leaf_index.get(id(param))
            grad = grads[idx] if idx is not None else None
            result[param] = (
                np.zeros(param.shape, dtype=np.float64)
                if grad is None
                else np.asarray(grad, dtype=np.float64).reshape(param.shape)
            )
        return result


def record(
    op: str, data: np.ndarray, inputs: Sequence[object], vjp: VJP
) -> Tensor:
    """
    Wrap a primitive's output and record it on the active tape.

    Recording happens only when a tape is active and at least one input is
    on it; otherwise the result is a constant tensor.
    """
    out = Tensor(data, dtype=storage_dtype())
    tape = current_tape()
    if tape is None:
        return out
    parents = [tape.index_of(x) if isinstance(x, Tensor) else None for x in inputs]
    if all(p is None for p in parents):
        return out
    out._tape = tape
    out._node = tape.record(op, parents, vjp, out.shape)
    out.requires_grad = True
    return out


def backward(
    loss: Tensor, params: Iterable[Tensor] | None = None
) -> dict[Tensor, np.ndarray]:
    """
    Reverse pass from a scalar loss on the tape that recorded it.

    Raises:
        ContractError: if the loss is not a scalar
    """
    if loss.size != 1:
        raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")
    if loss._tape is None:
        wanted = list(params or [])
        return {p: np.zeros(p.shape, dtype=np.float64) for p in wanted}
    return loss._tape.backward(loss, params)
