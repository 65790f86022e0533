"""Abstract interfaces implemented by pluggable components."""

from .deformer import Deformer

__all__ = ["Deformer"]
