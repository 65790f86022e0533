"""
Primitive Operations

Every primitive computes its forward value in 64-bit, stores the result
in the current storage precision and records a vector-Jacobian product on
the active tape. Elementwise binary operations follow numpy broadcasting;
gradients are summed back to each operand's shape.
"""

import builtins
from collections.abc import Sequence
from typing import Any

import numpy as np
from scipy.special import expit

from core.errors import ContractError, DimensionError

from .tape import record
from .tensor import Tensor

F64 = np.float64


def _val(x: Any) -> np.ndarray:
    if isinstance(x, Tensor):
        return np.asarray(x.data, dtype=F64)
    return np.asarray(x, dtype=F64)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back to an operand's shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(op: str, a: np.ndarray, b: np.ndarray) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(op, a.shape, b.shape) from None


# -- elementwise binary ---------------------------------------------------------


def add(a: Any, b: Any) -> Tensor:
    av, bv = _val(a), _val(b)
    _broadcast_shape("add", av, bv)
    sa, sb = av.shape, bv.shape
    return record(
        "add", av + bv, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb))
    )


def sub(a: Any, b: Any) -> Tensor:
    av, bv = _val(a), _val(b)
    _broadcast_shape("sub", av, bv)
    sa, sb = av.shape, bv.shape
    return record(
        "sub", av - bv, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb))
    )


def mul(a: Any, b: Any) -> Tensor:
    av, bv = _val(a), _val(b)
    _broadcast_shape("mul", av, bv)
    return record(
        "mul",
        av * bv,
        (a, b),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
    )


def div(a: Any, b: Any) -> Tensor:
    av, bv = _val(a), _val(b)
    _broadcast_shape("div", av, bv)
    out = av / bv
    return record(
        "div",
        out,
        (a, b),
        lambda g: (
            _unbroadcast(g / bv, av.shape),
            _unbroadcast(-g * out / bv, bv.shape),
        ),
    )


def neg(a: Any) -> Tensor:
    return record("neg", -_val(a), (a,), lambda g: (-g,))


def power(a: Any, exponent: float) -> Tensor:
    av = _val(a)
    return record(
        "power",
        av**exponent,
        (a,),
        lambda g: (g * exponent * av ** (exponent - 1),),
    )


def where(condition: np.ndarray, a: Any, b: Any) -> Tensor:
    """Select from ``a`` where the constant mask holds, else from ``b``."""
    cond = np.asarray(condition, dtype=bool)
    av, bv = _val(a), _val(b)
    out = np.where(cond, av, bv)
    return record(
        "where",
        out,
        (a, b),
        lambda g: (
            _unbroadcast(np.where(cond, g, 0.0), av.shape),
            _unbroadcast(np.where(cond, 0.0, g), bv.shape),
        ),
    )


# -- elementwise unary ----------------------------------------------------------


def exp(a: Any) -> Tensor:
    out = np.exp(_val(a))
    return record("exp", out, (a,), lambda g: (g * out,))


def log(a: Any) -> Tensor:
    av = _val(a)
    return record("log", np.log(av), (a,), lambda g: (g / av,))


def sqrt(a: Any) -> Tensor:
    out = np.sqrt(_val(a))
    return record("sqrt", out, (a,), lambda g: (g * 0.5 / out,))


def absolute(a: Any) -> Tensor:
    av = _val(a)
    return record("abs", np.abs(av), (a,), lambda g: (g * np.sign(av),))


def sin(a: Any) -> Tensor:
    av = _val(a)
    return record("sin", np.sin(av), (a,), lambda g: (g * np.cos(av),))


def cos(a: Any) -> Tensor:
    av = _val(a)
    return record("cos", np.cos(av), (a,), lambda g: (-g * np.sin(av),))


def relu(a: Any) -> Tensor:
    # Subgradient 0 is used at the kink.
    av = _val(a)
    mask = av > 0
    return record("relu", np.where(mask, av, 0.0), (a,), lambda g: (g * mask,))


def softplus(a: Any) -> Tensor:
    av = _val(a)
    linear_region = av >= 20.0
    out = np.where(linear_region, av, np.log1p(np.exp(np.minimum(av, 20.0))))
    slope = expit(av)
    return record("softplus", out, (a,), lambda g: (g * slope,))


def sigmoid(a: Any) -> Tensor:
    out = expit(_val(a))
    return record("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Any) -> Tensor:
    out = np.tanh(_val(a))
    return record("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


# -- reductions and shape --------------------------------------------------------


def sum(a: Any, axis: int | Sequence[int] | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    av = _val(a)
    out = av.sum(axis=axis, keepdims=keepdims)
    shape = av.shape

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return record("sum", out, (a,), vjp)


def mean(a: Any, axis: int | None = None, keepdims: bool = False) -> Tensor:
    av = _val(a)
    count = av.size if axis is None else av.shape[axis]
    return sum(a, axis=axis, keepdims=keepdims) * (1.0 / builtins.max(count, 1))


def reshape(a: Any, shape: Sequence[int]) -> Tensor:
    av = _val(a)
    original = av.shape
    return record(
        "reshape", av.reshape(shape), (a,), lambda g: (g.reshape(original),)
    )


def take(a: Any, index: Any) -> Tensor:
    """Basic or advanced indexing; repeated indices accumulate gradients."""
    av = _val(a)
    if isinstance(index, Tensor):
        raise ContractError("tensors cannot be used as indices")
    out = av[index]
    shape = av.shape
    parts = index if isinstance(index, tuple) else (index,)
    advanced = any(isinstance(p, np.ndarray | list) for p in parts)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros(shape, dtype=F64)
        if advanced:
            np.add.at(full, index, g)
        else:
            full[index] += g
        return (full,)

    return record("take", out, (a,), vjp)


def concat(tensors: Sequence[Any], axis: int = -1) -> Tensor:
    values = [_val(t) for t in tensors]
    try:
        out = np.concatenate(values, axis=axis)
    except ValueError:
        raise DimensionError("concat", *(v.shape for v in values)) from None
    sizes = [v.shape[axis] for v in values]
    splits = np.cumsum(sizes)[:-1]
    return record(
        "concat",
        out,
        tuple(tensors),
        lambda g: tuple(np.split(g, splits, axis=axis)),
    )


def stack(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    values = [_val(t) for t in tensors]
    try:
        out = np.stack(values, axis=axis)
    except ValueError:
        raise DimensionError("stack", *(v.shape for v in values)) from None
    count = len(values)
    return record(
        "stack",
        out,
        tuple(tensors),
        lambda g: tuple(np.take(g, i, axis=axis) for i in range(count)),
    )


# -- linear algebra -------------------------------------------------------------


def matmul(a: Any, b: Any) -> Tensor:
    av, bv = _val(a), _val(b)
    if bv.ndim != 2 or av.ndim not in (1, 2) or av.shape[-1] != bv.shape[0]:
        raise DimensionError("matmul", av.shape, bv.shape)
    out = av @ bv

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if av.ndim == 1:
            return g @ bv.T, np.outer(av, g)
        return g @ bv.T, av.T @ g

    return record("matmul", out, (a, b), vjp)


def linear(weight: Any, bias: Any, x: Any) -> Tensor:
    """
    Affine layer ``W·x + b`` for a single vector or a batch of row vectors.

    Args:
        weight: [out, in]
        bias: [out]
        x: [in] or [N, in]

    Returns:
        [out] or [N, out]
    """
    wv, bv, xv = _val(weight), _val(bias), _val(x)
    if wv.ndim != 2 or xv.ndim not in (1, 2) or xv.shape[-1] != wv.shape[1]:
        raise DimensionError("linear", wv.shape, xv.shape)
    if bv.shape != (wv.shape[0],):
        raise DimensionError("linear", wv.shape, bv.shape)
    out = xv @ wv.T + bv

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if xv.ndim == 1:
            return np.outer(g, xv), g, g @ wv
        return g.T @ xv, g.sum(axis=0), g @ wv

    return record("linear", out, (weight, bias, x), vjp)


# -- composite primitives with dedicated gradients ----------------------------------


def softmax(logits: Any, axis: int = -1) -> Tensor:
    """Max-subtracted softmax; outputs along ``axis`` sum to one."""
    lv = _val(logits)
    shifted = lv - lv.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)
    return record(
        "softmax",
        out,
        (logits,),
        lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),),
    )


def log_softmax(logits: Any, axis: int = -1) -> Tensor:
    lv = _val(logits)
    shifted = lv - lv.max(axis=axis, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - log_norm
    probs = np.exp(out)
    return record(
        "log_softmax",
        out,
        (logits,),
        lambda g: (g - probs * g.sum(axis=axis, keepdims=True),),
    )


def exclusive_cumprod(a: Any) -> Tensor:
    """
    Prefix products along the last axis, excluding the current entry.

    ``out[..., i] = prod(a[..., :i])`` with ``out[..., 0] = 1``. The reverse
    pass walks the recurrence instead of dividing, so zero factors are safe.
    """
    av = _val(a)
    count = av.shape[-1]
    out = np.ones_like(av)
    if count > 1:
        out[..., 1:] = np.cumprod(av[..., :-1], axis=-1)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros_like(av)
        carried = np.zeros(av.shape[:-1], dtype=F64)
        for i in range(count - 1, 0, -1):
            adjoint = g[..., i] + carried
            grad[..., i - 1] = adjoint * out[..., i - 1]
            carried = adjoint * av[..., i - 1]
        return (grad,)

    return record("exclusive_cumprod", out, (a,), vjp)


def positional_encoding(x: Any, n_freqs: int) -> Tensor:
    """
    Frequency encoding ``[x, sin(2^0 πx), cos(2^0 πx), ..., cos(2^(L-1) πx)]``.

    Args:
        x: [..., d]
        n_freqs: number of octaves L (0 returns x unchanged)

    Returns:
        [..., d + 2·L·d]
    """
    if n_freqs < 0:
        raise ContractError(f"positional encoding needs L >= 0, got {n_freqs}")
    xv = _val(x)
    d = xv.shape[-1]
    freqs = (2.0 ** np.arange(n_freqs)) * np.pi
    blocks = [xv]
    for f in freqs:
        blocks.append(np.sin(f * xv))
        blocks.append(np.cos(f * xv))
    out = np.concatenate(blocks, axis=-1)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        grad = g[..., :d].copy()
        for k, f in enumerate(freqs):
            g_sin = g[..., d * (1 + 2 * k) : d * (2 + 2 * k)]
            g_cos = g[..., d * (2 + 2 * k) : d * (3 + 2 * k)]
            grad += f * (np.cos(f * xv) * g_sin - np.sin(f * xv) * g_cos)
        return (grad,)

    return record("positional_encoding", out, (x,), vjp)


def norm(a: Any, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Euclidean norm along an axis."""
    return sqrt(sum(mul(a, a), axis=axis, keepdims=keepdims))


def logsumexp(a: Any, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Max-shifted ``log(sum(exp(a)))`` along an axis."""
    av = _val(a)
    peak = av.max(axis=axis, keepdims=True)
    total = np.exp(av - peak).sum(axis=axis, keepdims=True)
    out_keep = np.log(total) + peak
    probs = np.exp(av - out_keep)
    out = out_keep if keepdims else np.squeeze(out_keep, axis=axis)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        g_keep = g if keepdims else np.expand_dims(g, axis)
        return (probs * g_keep,)

    return record("logsumexp", out, (a,), vjp)


def transpose(a: Any, axes: Sequence[int] | None = None) -> Tensor:
    av = _val(a)
    axes = tuple(axes) if axes is not None else tuple(reversed(range(av.ndim)))
    inverse = tuple(np.argsort(axes))
    return record(
        "transpose", av.transpose(axes), (a,), lambda g: (g.transpose(inverse),)
    )
