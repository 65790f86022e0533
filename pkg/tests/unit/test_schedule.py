"""
Unit tests for training stages, the learning-rate schedule and ray
sampling.
"""

import logging
import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from core.config.schema import TrainSettings
from core.training import Stage, foreground_count, learning_rate, sample_pixels, sample_ray_batch, stage_of


class TestStages:
    """Test suite for stage boundaries."""

    def test_staged_boundaries(self):
        """Test stage 1, distillation and stage 2 step ranges."""
        cfg = TrainSettings(total_steps=100, stage1_fraction=0.2, distill_steps=10)
        stages = [stage_of(s, cfg) for s in range(100)]
        assert stages[:20] == [Stage.STAGE1] * 20
        assert stages[20:30] == [Stage.DISTILL] * 10
        assert stages[30:] == [Stage.STAGE2] * 70

    def test_no_distillation(self):
        """Test going straight from stage 1 to stage 2."""
        cfg = TrainSettings(total_steps=10, stage1_fraction=0.5, distill_steps=0)
        assert [stage_of(s, cfg) for s in (4, 5)] == [Stage.STAGE1, Stage.STAGE2]

    def test_tiny_schedule(self, tiny_config):
        """Test the two-steps-per-stage test configuration."""
        stages = [stage_of(s, tiny_config.train) for s in range(6)]
        assert stages == [Stage.STAGE1] * 2 + [Stage.DISTILL] * 2 + [Stage.STAGE2] * 2

    @pytest.mark.parametrize("schedule,stage", [("hard", Stage.STAGE1), ("joint", Stage.STAGE2)])
    def test_single_stage_schedules(self, schedule, stage):
        """Test that the ablation schedules never change stage."""
        cfg = TrainSettings(total_steps=50, schedule=schedule)
        assert {stage_of(s, cfg) for s in range(50)} == {stage}


class TestLearningRate:
    """Test suite for the exponential learning-rate decay."""

    def test_endpoints(self):
        """Test lr_start at step 0 and lr_end at the last step."""
        cfg = TrainSettings(total_steps=1000, lr_start=5e-4, lr_end=5e-5)
        assert learning_rate(0, cfg) == pytest.approx(5e-4)
        assert learning_rate(1000, cfg) == pytest.approx(5e-5)
        assert learning_rate(500, cfg) == pytest.approx(np.sqrt(5e-4 * 5e-5))

    def test_monotone_and_clamped(self):
        """Test decreasing rates that stay at lr_end past the end."""
        cfg = TrainSettings(total_steps=20, lr_start=1e-3, lr_end=1e-4)
        rates = [learning_rate(s, cfg) for s in range(30)]
        assert all(a > b for a, b in zip(rates[:20], rates[1:21], strict=True))
        assert rates[25] == pytest.approx(1e-4)


class TestPixelSampling:
    """Test suite for foreground-biased pixel sampling."""

    @pytest.mark.parametrize(
        "n,fraction,expected", [(10, 0.9, 9), (10, 0.95, 10), (7, 0.5, 4), (3, 1 / 3, 1), (5, 0.0, 0)]
    )
    def test_foreground_count(self, n, fraction, expected):
        """Test ceil(fraction · n)."""
        assert foreground_count(n, fraction) == expected

    def test_foreground_share(self):
        """Test the number of foreground pixels drawn."""
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:6, 2:6] = True
        picked, fg = sample_pixels(mask, 40, 0.9, np.random.default_rng(0))
        assert len(picked) == 40
        assert fg.sum() == 36
        np.testing.assert_array_equal(mask.reshape(-1)[picked], fg)

    def test_empty_mask_is_uniform(self, caplog):
        """Test the uniform fallback and its warning."""
        with caplog.at_level(logging.WARNING):
            picked, fg = sample_pixels(np.zeros((4, 4), dtype=bool), 10, 0.9, np.random.default_rng(0))
        assert len(picked) == 10 and not fg.any()
        assert "empty" in caplog.text

    def test_full_mask(self):
        """Test that a full mask yields only foreground rays."""
        picked, fg = sample_pixels(np.ones((4, 4), dtype=bool), 10, 0.5, np.random.default_rng(0))
        assert fg.all() and len(picked) == 10

    def test_ray_batch(self, dataset, tiny_config):
        """Test batch layout and colors read at the sampled pixels."""
        items = sample_ray_batch(dataset, tiny_config.train, np.random.default_rng(1))
        assert len(items) == tiny_config.train.batch_items
        for item in items:
            assert item.frame_index in dataset.train_idx
            assert len(item) == tiny_config.train.rays_per_item
            frame = dataset.frames[item.frame_index]
            np.testing.assert_array_equal(item.colors, frame.image[item.pixels[:, 1], item.pixels[:, 0]])
            np.testing.assert_allclose(np.linalg.norm(item.directions, axis=1), 1.0)
