"""
Configuration Manager

Centralized configuration management for the avatar pipeline.
Supports YAML (or JSON) project files, per-variant deformer defaults,
environment variable overrides and dotted ``key=value`` overrides.
"""

import logging
import os
from copy import deepcopy
from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from core.errors import ConfigError

from .schema import ProjectConfig

PROJECT_ROOT = Path(__file__).parent.parent.parent
ENV_PREFIX = "AVATAR__"
_VARIANT_METADATA = ("name", "description")


def deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge ``update`` into a copy of ``base``."""
    merged = deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = deepcopy(value)
    return merged


class ConfigManager:
    """
    Manages configuration loading, validation, and overrides.

    Precedence, lowest first: schema defaults, the deformer variant's
    ``config.yaml``, the project file, ``AVATAR__SECTION__KEY`` environment
    variables, command-line overrides.
    """

    def __init__(self, config_dir: Path | None = None, default_config: Path | None = None):
        """
        Initialize configuration manager.

        Args:
            config_dir: Directory containing the deformer variant directories
            default_config: Project file used when no path is given
        """
        if config_dir is None:
            config_dir = PROJECT_ROOT / "deformers"
        if default_config is None:
            default_config = PROJECT_ROOT / "configs" / "default.yaml"

        self.config_dir = Path(config_dir)
        self.default_config = Path(default_config)
        self._variants: dict[str, dict] = {}
        self.logger = logging.getLogger(__name__)

    def load_variant_config(self, variant: str) -> dict[str, Any]:
        """
        Load the default configuration of a deformer variant.

        Args:
            variant: Name of the variant directory

        Returns:
            Configuration dictionary (empty when the variant has none)
        """
        if variant in self._variants:
            return deepcopy(self._variants[variant])

        config_file = self.config_dir / variant / "config.yaml"
        if not config_file.exists():
            return {}

        try:
            with open(config_file) as f:
                config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {config_file}: {e}", key_path="deformer") from e

        self._variants[variant] = config
        return deepcopy(config)

    def load_file(self, path: str | Path | None = None) -> dict[str, Any]:
        """
        Read a YAML or JSON project file.

        Raises:
            FileNotFoundError: missing file
            ConfigError: unparseable content
        """
        path = Path(path) if path is not None else self.default_config
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            with open(path) as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return data

    def apply_overrides(self, config: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
        """
        Apply ``key=value`` overrides on dotted paths.

        Values are parsed as YAML, so ``train.lambda=0.01`` sets a float and
        ``render.background=[0,0,0]`` a list.

        Raises:
            ConfigError: an override without ``=`` or an empty key
        """
        config = deepcopy(config)
        for override in overrides:
            key, sep, raw = override.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ConfigError(f"override {override!r} is not of the form key=value")
            self._set_nested_value(config, key, self._parse_value(raw))
        return config

    def _apply_env_overrides(self, config: dict[str, Any]) -> dict[str, Any]:
        """
        Apply ``AVATAR__SECTION__KEY=value`` environment variables.

        Args:
            config: Base configuration

        Returns:
            Configuration with env overrides applied
        """
        config = deepcopy(config)
        for key, value in sorted(os.environ.items()):
            if key.startswith(ENV_PREFIX):
                config_key = ".".join(key[len(ENV_PREFIX) :].lower().split("__"))
                self.logger.debug(f"Environment override {config_key}")
                self._set_nested_value(config, config_key, self._parse_value(value))
        return config

    @staticmethod
    def _parse_value(raw: str) -> Any:
        # Try to parse as YAML for proper type conversion
        try:
            return yaml.safe_load(raw)
        except yaml.YAMLError:
            return raw

    def _set_nested_value(self, config: dict, key: str, value: Any) -> None:
        """
        Set nested value in dictionary using dot notation.

        Raises:
            ConfigError: a path component that is not a mapping
        """
        keys = key.split(".")
        current = config

        for depth, k in enumerate(keys[:-1]):
            if k not in current or current[k] is None:
                current[k] = {}
            if not isinstance(current[k], dict):
                raise ConfigError("is not a section", key_path=".".join(keys[: depth + 1]))
            current = current[k]

        current[keys[-1]] = value

    def validate(self, data: dict[str, Any]) -> ProjectConfig:
        """
        Build the typed configuration, merging the deformer variant defaults.

        Raises:
            ConfigError: unknown keys, wrong types or out-of-range values,
                reported with the dotted key path
        """
        deformer = data.get("deformer") or {}
        if not isinstance(deformer, dict):
            raise ConfigError("must be a mapping", key_path="deformer")
        variant = deformer.get("variant", "part_based")
        defaults = {
            k: v for k, v in self.load_variant_config(str(variant)).items()
            if k not in _VARIANT_METADATA
        }
        data = {**data, "deformer": deep_merge(defaults, deformer)}
        try:
            return ProjectConfig.model_validate(data)
        except ValidationError as e:
            error = e.errors()[0]
            key_path = ".".join(str(part) for part in error["loc"])
            raise ConfigError(error["msg"], key_path=key_path) from e

    def parse_config(
        self,
        path: str | Path | None = None,
        overrides: list[str] | None = None,
        use_env: bool = True,
    ) -> ProjectConfig:
        """
        Load, override and validate a project configuration.

        Args:
            path: YAML or JSON file; the default project file when None
            overrides: ``key=value`` strings on dotted paths
            use_env: apply ``AVATAR__`` environment variables
        """
        return self.resolve(self.load_file(path), overrides, use_env)

    def resolve(
        self,
        data: dict[str, Any],
        overrides: list[str] | None = None,
        use_env: bool = True,
    ) -> ProjectConfig:
        """Apply environment and ``key=value`` overrides to loaded data and validate."""
        if use_env:
            data = self._apply_env_overrides(data)
        return self.validate(self.apply_overrides(data, overrides or []))

    def echo(self, config: ProjectConfig, out_dir: str | Path) -> Path:
        """Write the resolved configuration to ``out_dir/config.yaml``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "config.yaml"
        with open(path, "w") as f:
            yaml.safe_dump(config.to_dict(), f, default_flow_style=False, sort_keys=False, indent=2)
        return path


# Global configuration manager instance
config_manager = ConfigManager()
