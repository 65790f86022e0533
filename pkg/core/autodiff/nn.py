"""
Network Building Blocks

Multi-layer perceptrons over the tape primitives and a small parameter
container protocol shared by every trainable component.
"""

from collections.abc import Sequence

import numpy as np

from core.errors import ContractError, ShapeMismatchError

from . import ops
from .tensor import Tensor

ACTIVATIONS = {
    "softplus": ops.softplus,
    "relu": ops.relu,
    "tanh": ops.tanh,
}


class ParameterSet:
    """
    Anything owning named trainable tensors.

    Subclasses implement ``named_parameters``; state export/import and
    counting come for free.
    """

    def named_parameters(self) -> dict[str, Tensor]:
        raise NotImplementedError

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters().items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """
        Copy stored arrays into the parameters in place.

        Raises:
            ShapeMismatchError: missing names or differing shapes
        """
        params = self.named_parameters()
        missing = sorted(set(params) - set(state))
        if missing:
            raise ShapeMismatchError(f"missing parameters in state: {missing[:5]}")
        for name, param in params.items():
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise ShapeMismatchError(
                    f"{name}: stored shape {value.shape} != expected {param.shape}"
                )
            param.data[...] = value


class MLP(ParameterSet):
    """
    Fully connected network with a shared hidden activation.

    ``hidden`` lists the width of each hidden layer; the output layer is
    linear. Weights use Glorot-uniform initialization from the given
    generator; the output layer can start at zero so that freshly built
    deformation and assignment networks are neutral.
    """

    def __init__(
        self,
        in_features: int,
        hidden: Sequence[int],
        out_features: int,
        rng: np.random.Generator,
        activation: str = "softplus",
        zero_output: bool = False,
        output_bias: float = 0.0,
        name: str = "mlp",
    ):
        if activation not in ACTIVATIONS:
            raise ContractError(f"unknown activation {activation!r}")
        self.name = name
        self.activation = ACTIVATIONS[activation]
        self.widths = [in_features, *hidden, out_features]
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        n_layers = len(self.widths) - 1
        for i in range(n_layers):
            fan_in, fan_out = self.widths[i], self.widths[i + 1]
            is_output = i == n_layers - 1
            if is_output and zero_output:
                w = np.zeros((fan_out, fan_in))
            else:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
            b = np.full(fan_out, output_bias if is_output else 0.0)
            self.weights.append(Tensor(w, requires_grad=True, name=f"{name}.{i}.weight"))
            self.biases.append(Tensor(b, requires_grad=True, name=f"{name}.{i}.bias"))

    @property
    def in_features(self) -> int:
        return self.widths[0]

    @property
    def out_features(self) -> int:
        return self.widths[-1]

    def named_parameters(self) -> dict[str, Tensor]:
        named: dict[str, Tensor] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            named[f"layers.{i}.weight"] = w
            named[f"layers.{i}.bias"] = b
        return named

    def forward_with_features(self, x: Tensor | np.ndarray) -> tuple[Tensor, Tensor]:
        """
        Evaluate the network.

        Returns:
            Tuple of (output, activations of the last hidden layer)
        """
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1], strict=True):
            h = self.activation(ops.linear(w, b, h))
        return ops.linear(self.weights[-1], self.biases[-1], h), h

    def __call__(self, x: Tensor | np.ndarray) -> Tensor:
        return self.forward_with_features(x)[0]


def prefixed(prefix: str, params: dict[str, Tensor]) -> dict[str, Tensor]:
    """Namespace a parameter dictionary."""
    return {f"{prefix}.{name}": p for name, p in params.items()}
