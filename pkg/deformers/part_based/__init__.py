"""Part-based fine deformation."""

from .deformer import PartBasedDeformer

__all__ = ["PartBasedDeformer"]
