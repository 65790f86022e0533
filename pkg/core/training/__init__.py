"""
Training Module

Losses, the Adam optimizer, the stage schedule, ray sampling and the
training loop.
"""

from .losses import ball_perturbations, cross_entropy, normal_reg_loss, photometric_loss
from .optimizer import Adam
from .sampler import RayItem, foreground_count, sample_pixels, sample_ray_batch
from .schedule import Stage, learning_rate, stage_of
from .trainer import Trainer, TrainResult, build_deformer

__all__ = [
    "Adam",
    "RayItem",
    "Stage",
    "TrainResult",
    "Trainer",
    "ball_perturbations",
    "build_deformer",
    "cross_entropy",
    "foreground_count",
    "learning_rate",
    "normal_reg_loss",
    "photometric_loss",
    "sample_pixels",
    "sample_ray_batch",
    "stage_of",
]
