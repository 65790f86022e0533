"""
Head Model Module

FLAME-style parametric head: blendshapes, kinematic chain, forward
skinning and inverse skinning into canonical space.
"""

from .flame_lite import build_flame_lite
from .io import load_head_model, save_head_model
from .knn import KnnIndex, knn_weights
from .lbs import (
    PosedHead,
    blendshape_offsets,
    canonical_vertices,
    inverse_lbs,
    joint_positions,
    joint_transforms,
    lbs_forward,
    pose_feature,
    vertex_transforms,
)
from .model import PART_NAMES, CanonicalConfig, HeadModel, PoseExpr
from .rotation import rodrigues

__all__ = [
    "PART_NAMES",
    "CanonicalConfig",
    "HeadModel",
    "KnnIndex",
    "PoseExpr",
    "PosedHead",
    "blendshape_offsets",
    "build_flame_lite",
    "canonical_vertices",
    "inverse_lbs",
    "joint_positions",
    "joint_transforms",
    "knn_weights",
    "lbs_forward",
    "load_head_model",
    "pose_feature",
    "rodrigues",
    "save_head_model",
    "vertex_transforms",
]
