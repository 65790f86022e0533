"""
Pipeline Module

Command orchestration and the command-line entry point.
"""

from .cli import build_parser, run
from .runner import AvatarPipeline, load_sequence, part_colors

__all__ = ["AvatarPipeline", "build_parser", "load_sequence", "part_colors", "run"]
