"""
Tensor Module

Dense row-major arrays that can be recorded on a tape for reverse-mode
differentiation. Values are stored in the current storage precision
(32-bit by default) while every primitive computes in 64-bit.
"""

from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from typing import TYPE_CHECKING, Any

import numpy as np

from core.errors import NonFiniteError

if TYPE_CHECKING:
    from .tape import Tape

_storage_dtype: type[np.floating] = np.float32


def storage_dtype() -> type[np.floating]:
    """Return the dtype new tensors are stored in."""
    return _storage_dtype


@contextmanager
def precision(dtype: Any) -> Iterator[None]:
    """
    Temporarily change the storage precision of newly created tensors.

    Gradient checks run under ``precision(np.float64)`` so that central
    differences are not dominated by 32-bit rounding.

    Args:
        dtype: numpy floating dtype (``np.float32`` or ``np.float64``)
    """
    global _storage_dtype
    previous = _storage_dtype
    _storage_dtype = np.dtype(dtype).type
    try:
        yield
    finally:
        _storage_dtype = previous


class Tensor:
    """
    Dense numeric array with optional gradient tracking.

    A tensor created directly with ``requires_grad=True`` is a leaf (a
    parameter or an input being differentiated). Tensors produced by
    primitives while a tape is active carry a reference to the tape node
    that produced them.
    """

    __slots__ = ("data", "requires_grad", "name", "_tape", "_node")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: Any = None,
    ):
        arr = np.array(data, dtype=dtype or _storage_dtype)
        if not np.isfinite(arr).all():
            raise NonFiniteError(
                f"tensor {name or ''} of shape {arr.shape} holds NaN/Inf values"
            )
        self.data: np.ndarray = arr
        self.requires_grad = requires_grad
        self.name = name
        self._tape: Tape | None = None
        self._node: int | None = None

    # -- metadata -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        """Return a copy of the values as a numpy array."""
        return self.data.copy()

    def item(self) -> float:
        """Return the single value of a one-element tensor."""
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Return a constant tensor sharing no tape history."""
        return Tensor(self.data, dtype=self.data.dtype)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def __len__(self) -> int:
        return len(self.data)

    # Identity semantics: tensors are used as dictionary keys for gradients.
    __hash__ = object.__hash__

    # numpy arrays on the left defer to the reflected operators below
    __array_ufunc__ = None

    # -- operators ------------------------------------------------------------

    def __add__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.div(self, other)

    def __rtruediv__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.div(other, self)

    def __neg__(self) -> "Tensor":
        from . import ops

        return ops.neg(self)

    def __pow__(self, exponent: float) -> "Tensor":
        from . import ops

        return ops.power(self, exponent)

    def __matmul__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        from . import ops

        return ops.take(self, index)

    def sum(self, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> "Tensor":
        from . import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        from . import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        from . import ops

        if len(shape) == 1 and isinstance(shape[0], tuple | list):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)


def as_tensor(value: Any) -> Tensor:
    """Wrap plain numbers and arrays as constant tensors."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)
