"""
Pytest configuration and fixtures for avatar testing.

This module provides common fixtures and configuration that can be used
across all test modules to ensure consistency and reduce duplication.
"""

import os
import sys

import pytest

# Add the project root to the path to import modules
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from tests.fixtures.data_fixtures import (  # noqa: E402, F401
    canonical_config,
    dataset,
    head_model,
    rng,
    synthetic_dir,
    tiny_config,
    tiny_model,
)


@pytest.fixture(autouse=True)
def _clear_avatar_env(monkeypatch):
    """Keep AVATAR__ variables from the developer's shell out of the tests."""
    for key in list(os.environ):
        if key.startswith("AVATAR__"):
            monkeypatch.delenv(key, raising=False)
