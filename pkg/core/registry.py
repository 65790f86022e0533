"""
Deformer Registry

Central registry for discovering the available fine-deformation variants.
New variants are added as a directory under ``deformers/`` without
touching the trainer or the pipeline.
"""

import importlib
import logging
from pathlib import Path

import numpy as np

from core.errors import ConfigError
from core.interfaces.deformer import Deformer


class DeformerRegistry:
    """
    Registry for deformer classes.

    Discovers variants in the deformers/ directory. Convention: directory
    ``part_based`` holds ``deformer.py`` defining ``PartBasedDeformer``.
    """

    def __init__(self):
        self._deformers: dict[str, type[Deformer]] = {}
        self.deformers_path = Path(__file__).parent.parent / "deformers"
        self.logger = logging.getLogger(__name__)

    def discover_deformers(self) -> None:
        """Import every variant directory under deformers/."""
        if not self.deformers_path.exists():
            return

        for variant_dir in sorted(self.deformers_path.iterdir()):
            if variant_dir.is_dir() and not variant_dir.name.startswith("__"):
                self._load_from_directory(variant_dir)

    def _load_from_directory(self, variant_dir: Path) -> None:
        name = variant_dir.name
        if not (variant_dir / "deformer.py").exists():
            return

        try:
            module = importlib.import_module(f"deformers.{name}.deformer")
        except ImportError as e:
            self.logger.warning(f"Could not import deformer {name}: {e}")
            return

        class_name = "".join(word.capitalize() for word in name.split("_")) + "Deformer"
        if hasattr(module, class_name):
            self._deformers[name] = getattr(module, class_name)

    def register_deformer(self, name: str, deformer_class: type[Deformer]) -> None:
        """Add a variant defined outside deformers/ (shipped variants stay available)."""
        if not self._deformers:
            self.discover_deformers()
        self._deformers[name] = deformer_class

    def get_deformer_class(self, name: str) -> type[Deformer] | None:
        if not self._deformers:
            self.discover_deformers()
        return self._deformers.get(name)

    def create_deformer(
        self, name: str, config: dict | None, cond_dim: int, rng: np.random.Generator
    ) -> Deformer:
        """
        Build a deformer by variant name.

        Raises:
            ConfigError: unknown variant
        """
        deformer_class = self.get_deformer_class(name)
        if deformer_class is None:
            raise ConfigError(
                f"unknown deformer variant {name!r}; available: {self.list_deformers()}",
                key_path="deformer.variant",
            )
        return deformer_class(config, cond_dim, rng)

    def list_deformers(self) -> list[str]:
        if not self._deformers:
            self.discover_deformers()
        return sorted(self._deformers)


# Global registry instance
registry = DeformerRegistry()
