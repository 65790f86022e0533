"""
Data Module

Datasets (manifest, images, masks), the synthetic generator, training
checkpoints, image metrics and the DuckDB run store.
"""

from .checkpoint import Checkpoint, load_checkpoint, restore_checkpoint, save_checkpoint
from .images import read_image, read_mask, write_image, write_mask
from .manifest import MANIFEST_NAME, Dataset, Frame, load_dataset, write_manifest
from .metrics import image_metrics, l1, psnr, ssim
from .run_store import RunStore
from .synthetic import generate_synthetic, render_ground_truth

__all__ = [
    "MANIFEST_NAME",
    "Checkpoint",
    "Dataset",
    "Frame",
    "RunStore",
    "generate_synthetic",
    "image_metrics",
    "l1",
    "load_checkpoint",
    "load_dataset",
    "psnr",
    "read_image",
    "read_mask",
    "render_ground_truth",
    "restore_checkpoint",
    "save_checkpoint",
    "ssim",
    "write_image",
    "write_manifest",
    "write_mask",
]
