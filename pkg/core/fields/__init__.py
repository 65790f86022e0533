"""
Fields Module

Occupancy/color fields (the learned canonical field and closed-form
ground-truth fields) and the posed-to-canonical warp.
"""

from .analytic import AnalyticHeadField, ConstantField, PlaneField, SphereField
from .canonical import CanonicalField
from .occupancy import OccupancyField
from .warp import PartLabeler, WarpResult, deform_to_canonical, warp_points

__all__ = [
    "AnalyticHeadField",
    "CanonicalField",
    "ConstantField",
    "OccupancyField",
    "PartLabeler",
    "PlaneField",
    "SphereField",
    "WarpResult",
    "deform_to_canonical",
    "warp_points",
]
