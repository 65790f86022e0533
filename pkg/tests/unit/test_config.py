"""
Unit tests for configuration loading, overrides and validation.
"""

import os
import sys

import pytest

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from core.config import config_manager, deep_merge
from core.errors import ConfigError
from tests.fixtures.sample_data import create_tiny_config_data


class TestDefaultConfig:
    """Test suite for the shipped project file."""

    def test_parses(self):
        """Test the default file with variant defaults merged in."""
        config = config_manager.parse_config(use_env=False)
        assert config.deformer.variant == "part_based"
        assert config.deformer.n_parts == 7
        assert config.deformer.local_net.width == 64
        assert config.train.lambda_ == pytest.approx(0.005)
        assert config.head_model.knn == 4

    def test_missing_file(self, tmp_path):
        """Test that a missing project file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            config_manager.parse_config(tmp_path / "absent.yaml")

    def test_json_file(self, tmp_path):
        """Test that JSON project files are accepted."""
        path = tmp_path / "config.json"
        path.write_text('{"seed": 7, "train": {"lambda": 0.0}}')
        config = config_manager.parse_config(path, use_env=False)
        assert config.seed == 7
        assert config.train.lambda_ == 0.0


class TestOverrides:
    """Test suite for key=value and environment overrides."""

    def test_dotted_override(self):
        """Test typed values on dotted paths."""
        config = config_manager.resolve(
            create_tiny_config_data(),
            ["train.lambda=0.01", "render.background=[0, 0, 0]", "deformer.variant=global_field"],
            use_env=False,
        )
        assert config.train.lambda_ == pytest.approx(0.01)
        assert config.render.background == (0.0, 0.0, 0.0)
        assert config.deformer.variant == "global_field"

    def test_environment_override(self, monkeypatch):
        """Test AVATAR__SECTION__KEY variables."""
        monkeypatch.setenv("AVATAR__TRAIN__LAMBDA", "0.02")
        config = config_manager.resolve(create_tiny_config_data())
        assert config.train.lambda_ == pytest.approx(0.02)

    def test_command_line_beats_environment(self, monkeypatch):
        """Test override precedence."""
        monkeypatch.setenv("AVATAR__SEED", "3")
        config = config_manager.resolve(create_tiny_config_data(), ["seed=4"])
        assert config.seed == 4

    def test_malformed_override(self):
        """Test that an override without '=' is refused."""
        with pytest.raises(ConfigError, match="key=value"):
            config_manager.resolve(create_tiny_config_data(), ["train.lambda"], use_env=False)

    def test_override_into_scalar(self):
        """Test that a path through a scalar names the offending key."""
        with pytest.raises(ConfigError) as exc_info:
            config_manager.resolve(create_tiny_config_data(), ["seed.value=1"], use_env=False)
        assert exc_info.value.key_path == "seed"


class TestValidation:
    """Test suite for schema validation."""

    def test_unknown_key(self):
        """Test that a misspelled key is reported with its path."""
        with pytest.raises(ConfigError) as exc_info:
            config_manager.resolve(create_tiny_config_data(), ["train.lamda=1"], use_env=False)
        assert exc_info.value.key_path == "train.lamda"

    def test_out_of_range(self):
        """Test a value outside its bounds."""
        with pytest.raises(ConfigError) as exc_info:
            config_manager.resolve(create_tiny_config_data(), ["train.total_steps=0"], use_env=False)
        assert exc_info.value.key_path == "train.total_steps"

    def test_alias_reported(self):
        """Test that the file key name is used for aliased fields."""
        with pytest.raises(ConfigError) as exc_info:
            config_manager.resolve(create_tiny_config_data(), ["train.lambda=-1"], use_env=False)
        assert exc_info.value.key_path == "train.lambda"

    def test_near_far_order(self):
        """Test the render bounds check."""
        with pytest.raises(ConfigError):
            config_manager.resolve(create_tiny_config_data(render={"near": 3.0, "far": 1.0}), use_env=False)

    def test_variant_defaults_merged(self):
        """Test that project keys win over variant defaults, key by key."""
        data = create_tiny_config_data(deformer={"variant": "global_field", "local_net": {"width": 8}})
        config = config_manager.resolve(data, use_env=False)
        assert config.deformer.local_net.width == 8
        assert config.deformer.local_net.depth == 4
        assert config.deformer.width is None


class TestEcho:
    """Test suite for writing the resolved configuration."""

    def test_round_trip(self, tmp_path, tiny_config):
        """Test that an echoed configuration parses to the same values."""
        path = config_manager.echo(tiny_config, tmp_path)
        assert path.name == "config.yaml"
        again = config_manager.parse_config(path, use_env=False)
        assert again.to_dict() == tiny_config.to_dict()
        assert "lambda" in path.read_text()

    def test_deep_merge(self):
        """Test nested merging without mutating the inputs."""
        base = {"a": {"b": 1, "c": 2}, "d": 3}
        merged = deep_merge(base, {"a": {"b": 5}})
        assert merged == {"a": {"b": 5, "c": 2}, "d": 3}
        assert base["a"]["b"] == 1
