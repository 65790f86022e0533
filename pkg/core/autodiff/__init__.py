"""
Autodiff Module

Minimal dense tensors with reverse-mode automatic differentiation, enough
for the deformation networks, the canonical field, the renderer and the
training losses.
"""

from . import ops
from .gradcheck import GradientCheckReport, gradient_check
from .nn import MLP, ParameterSet, prefixed
from .tape import Tape, backward, current_tape
from .tensor import Tensor, as_tensor, precision, storage_dtype

__all__ = [
    "MLP",
    "GradientCheckReport",
    "ParameterSet",
    "Tape",
    "Tensor",
    "as_tensor",
    "backward",
    "current_tape",
    "gradient_check",
    "ops",
    "precision",
    "prefixed",
    "storage_dtype",
]
