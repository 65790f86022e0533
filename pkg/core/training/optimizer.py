"""Adam optimizer over named tensors."""

from collections.abc import Iterable

import numpy as np

from core.autodiff import Tensor
from core.errors import NonFiniteError, ShapeMismatchError


class Adam:
    """
    Adam with per-parameter step counts, so parameters frozen during a
    training stage keep their bias correction when they resume.

    Moments are stored in 32-bit floats, updates are computed in 64-bit.
    """

    def __init__(
        self,
        params: dict[str, Tensor],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {name: np.zeros(p.shape, dtype=np.float32) for name, p in params.items()}
        self.v = {name: np.zeros(p.shape, dtype=np.float32) for name, p in params.items()}
        self.steps = dict.fromkeys(params, 0)

    def step(
        self,
        grads: dict[str, np.ndarray],
        lr: float,
        names: Iterable[str] | None = None,
    ) -> None:
        """
        Update the named parameters (all by default) that have a gradient.

        Raises:
            NonFiniteError: a gradient holds NaN or Inf; nothing is updated
        """
        selected = [n for n in (names if names is not None else self.params) if n in grads]
        for name in selected:
            if not np.isfinite(grads[name]).all():
                raise NonFiniteError(f"gradient of {name} holds NaN/Inf values")
        for name in selected:
            param = self.params[name]
            g = np.asarray(grads[name], dtype=np.float64).reshape(param.shape)
            self.steps[name] += 1
            t = self.steps[name]
            m = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            v = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            self.m[name][...] = m
            self.v[name][...] = v
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            param.data[...] = param.data - lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_dict(self) -> tuple[dict[str, np.ndarray], dict[str, int]]:
        tensors = {}
        for name in self.params:
            tensors[f"m.{name}"] = self.m[name].copy()
            tensors[f"v.{name}"] = self.v[name].copy()
        return tensors, dict(self.steps)

    def load_state_dict(self, tensors: dict[str, np.ndarray], steps: dict[str, int]) -> None:
        """
        Raises:
            ShapeMismatchError: missing moments or differing shapes
        """
        for name, param in self.params.items():
            for kind, store in (("m", self.m), ("v", self.v)):
                key = f"{kind}.{name}"
                if key not in tensors:
                    raise ShapeMismatchError(f"optimizer state lacks {key}")
                value = np.asarray(tensors[key])
                if value.shape != param.shape:
                    raise ShapeMismatchError(
                        f"{key}: stored shape {value.shape} != expected {param.shape}"
                    )
                store[name][...] = value
            self.steps[name] = int(steps.get(name, 0))
