"""
Configuration Module

Typed project configuration and its loader.
"""

from .manager import ConfigManager, config_manager, deep_merge
from .schema import ProjectConfig

__all__ = ["ConfigManager", "ProjectConfig", "config_manager", "deep_merge"]
