"""
Render Module

Pinhole cameras and the occupancy volume renderer.
"""

from .camera import Camera, generate_rays, look_at, orbit_camera
from .renderer import (
    AvatarScene,
    FieldScene,
    RayBatch,
    RenderConfig,
    RenderedFrame,
    SampleEvaluation,
    SurfaceHits,
    accumulate_weights,
    composite,
    find_surface_point,
    find_surface_points,
    render_frame,
    render_image,
    render_ray,
    render_rays,
    sample_points,
    shade_samples,
)

__all__ = [
    "AvatarScene",
    "Camera",
    "FieldScene",
    "RayBatch",
    "RenderConfig",
    "RenderedFrame",
    "SampleEvaluation",
    "SurfaceHits",
    "accumulate_weights",
    "composite",
    "find_surface_point",
    "find_surface_points",
    "generate_rays",
    "look_at",
    "orbit_camera",
    "render_frame",
    "render_image",
    "render_ray",
    "render_rays",
    "sample_points",
    "shade_samples",
]
