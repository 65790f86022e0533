"""
Unit tests for dataset manifests, image I/O and the synthetic generator.
"""

import json
import os
import shutil
import sys

import numpy as np
import pytest
from PIL import Image

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from core.data import (
    MANIFEST_NAME,
    generate_synthetic,
    load_dataset,
    psnr,
    read_image,
    read_mask,
    render_ground_truth,
    write_image,
    write_mask,
)
from core.data.synthetic import render_config as synthetic_render_config
from core.errors import DatasetError


@pytest.fixture
def dataset_copy(synthetic_dir, tmp_path):
    """Writable copy of the shared synthetic dataset."""
    target = tmp_path / "data"
    shutil.copytree(synthetic_dir, target)
    return target


def _edit_manifest(root, edit):
    path = root / MANIFEST_NAME
    manifest = json.loads(path.read_text())
    edit(manifest)
    path.write_text(json.dumps(manifest))


class TestImages:
    """Test suite for PNG image and mask I/O."""

    def test_image_quantized(self, tmp_path):
        """Test that a written image reads back within 8-bit precision."""
        image = np.random.default_rng(0).uniform(0, 1, (5, 7, 3))
        again = read_image(write_image(tmp_path / "a.png", image))
        assert again.shape == (5, 7, 3)
        assert np.abs(again - image).max() <= 0.5 / 255 + 1e-12

    def test_mask(self, tmp_path):
        """Test boolean masks stored as {0, 255}."""
        mask = np.random.default_rng(1).uniform(size=(6, 4)) > 0.5
        np.testing.assert_array_equal(read_mask(write_mask(tmp_path / "m.png", mask)), mask)

    def test_non_binary_mask(self, tmp_path):
        """Test that gray values are refused."""
        Image.fromarray(np.full((4, 4), 128, dtype=np.uint8), mode="L").save(tmp_path / "m.png")
        with pytest.raises(DatasetError, match="not binary"):
            read_mask(tmp_path / "m.png")


class TestSyntheticDataset:
    """Test suite for the generated ground-truth dataset."""

    def test_layout(self, dataset):
        """Test frame count, split and resolution."""
        assert len(dataset) == 4
        assert dataset.train_idx == [0, 1, 2]
        assert dataset.test_idx == [3]
        assert dataset.split("test") == [3]
        assert dataset.head_model.n_vertices == 42
        assert dataset.frames[0].image.shape == (16, 16, 3)
        assert dataset.frames[0].mask.shape == (16, 16)

    def test_first_frame_neutral(self, dataset):
        """Test zero pose and expression in frame 0."""
        pe = dataset.frames[0].pe
        assert not pe.theta.any() and not pe.psi.any()
        np.testing.assert_allclose(pe.beta, dataset.beta_avg)

    def test_head_visible(self, dataset):
        """Test that every mask has foreground and background pixels."""
        for frame in dataset.frames:
            assert 0 < frame.mask.mean() < 1

    def test_jaw_only_opens(self, dataset):
        """Test non-negative jaw rotations about x."""
        for frame in dataset.frames:
            assert frame.pe.theta[6] >= 0.0

    def test_deterministic(self, tiny_config, synthetic_dir, tmp_path):
        """Test that the same seed reproduces the same images."""
        again = generate_synthetic(tiny_config.synthetic, tmp_path / "again", tiny_config.render)
        for a, b in zip(again.frames, load_dataset(synthetic_dir).frames, strict=True):
            np.testing.assert_array_equal(a.image, b.image)
        assert (tmp_path / "again" / MANIFEST_NAME).read_text() == (synthetic_dir / MANIFEST_NAME).read_text()

    def test_rerendered_frames_match_saved_images(self, tiny_config, dataset):
        """Test that re-rendering each manifest entry reproduces its image above 45 dB."""
        spec = tiny_config.synthetic
        cfg = synthetic_render_config(spec, tiny_config.render)
        for frame in dataset.frames:
            image, mask = render_ground_truth(
                dataset.head_model, frame.pe, frame.camera, cfg, spec.sharpness
            )
            assert psnr(image, frame.image) > 45.0
            assert (mask == frame.mask).mean() >= 0.99

    def test_unknown_split(self, dataset):
        """Test that only train and test splits exist."""
        with pytest.raises(DatasetError, match="unknown split"):
            dataset.split("validation")


class TestManifestErrors:
    """Test suite for manifest validation."""

    def test_missing_manifest(self, tmp_path):
        """Test FileNotFoundError for a directory without a manifest."""
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path)

    def test_invalid_json(self, tmp_path):
        """Test that unparseable JSON raises DatasetError."""
        (tmp_path / MANIFEST_NAME).write_text("{not json")
        with pytest.raises(DatasetError, match="not valid JSON"):
            load_dataset(tmp_path)

    def test_missing_image(self, dataset_copy):
        """Test that the missing file's frame index is reported."""
        (dataset_copy / "images" / "0001.png").unlink()
        with pytest.raises(DatasetError) as exc_info:
            load_dataset(dataset_copy)
        assert exc_info.value.frame_index == 1

    def test_missing_frame_key(self, dataset_copy):
        """Test schema errors inside a frame entry."""
        _edit_manifest(dataset_copy, lambda m: m["frames"][2].pop("psi"))
        with pytest.raises(DatasetError) as exc_info:
            load_dataset(dataset_copy)
        assert exc_info.value.frame_index == 2

    def test_wrong_coefficient_length(self, dataset_copy):
        """Test coefficients that do not fit the head model."""
        _edit_manifest(dataset_copy, lambda m: m["frames"][1].update(theta=[0.0] * 6))
        with pytest.raises(DatasetError) as exc_info:
            load_dataset(dataset_copy)
        assert exc_info.value.frame_index == 1

    def test_split_out_of_range(self, dataset_copy):
        """Test a split entry past the last frame."""
        _edit_manifest(dataset_copy, lambda m: m.update(test_idx=[3, 7]))
        with pytest.raises(DatasetError) as exc_info:
            load_dataset(dataset_copy)
        assert exc_info.value.frame_index == 7

    def test_split_overlap(self, dataset_copy):
        """Test train and test sharing a frame."""
        _edit_manifest(dataset_copy, lambda m: m.update(test_idx=[2, 3]))
        with pytest.raises(DatasetError, match="share") as exc_info:
            load_dataset(dataset_copy)
        assert exc_info.value.frame_index == 2

    def test_empty_train_split(self, dataset_copy):
        """Test that training needs at least one frame."""
        _edit_manifest(dataset_copy, lambda m: m.update(train_idx=[]))
        with pytest.raises(DatasetError, match="empty"):
            load_dataset(dataset_copy)

    def test_non_binary_mask_in_frame(self, dataset_copy):
        """Test that a bad mask is reported with its frame on access."""
        Image.fromarray(np.full((16, 16), 7, dtype=np.uint8), mode="L").save(dataset_copy / "masks" / "0002.png")
        dataset = load_dataset(dataset_copy)
        with pytest.raises(DatasetError) as exc_info:
            _ = dataset.frames[2].mask
        assert exc_info.value.frame_index == 2
        with pytest.raises(DatasetError):
            load_dataset(dataset_copy, verify=True)

    def test_image_size_mismatch(self, dataset_copy):
        """Test images that do not match their camera."""
        write_image(dataset_copy / "images" / "0000.png", np.zeros((8, 8, 3)))
        with pytest.raises(DatasetError, match="camera expects") as exc_info:
            _ = load_dataset(dataset_copy).frames[0].image
        assert exc_info.value.frame_index == 0
