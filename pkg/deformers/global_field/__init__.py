"""Single-network fine deformation (ablation baseline)."""

from .deformer import GlobalFieldDeformer

__all__ = ["GlobalFieldDeformer"]
