"""
Unit tests for the camera model and the volume renderer.
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from core.autodiff import Tensor, precision
from core.config.schema import RenderSettings
from core.errors import ContractError
from core.fields import SphereField
from core.render import (
    Camera,
    FieldScene,
    RenderConfig,
    accumulate_weights,
    composite,
    find_surface_point,
    find_surface_points,
    generate_rays,
    look_at,
    orbit_camera,
    render_frame,
    render_ray,
    render_rays,
    sample_points,
)


def brute_force_weights(o: np.ndarray) -> np.ndarray:
    w = np.zeros_like(o)
    for r in range(o.shape[0]):
        for i in range(o.shape[1]):
            transmittance = 1.0
            for j in range(i):
                transmittance *= 1.0 - o[r, j]
            w[r, i] = o[r, i] * transmittance
    return w


@pytest.fixture
def sphere_scene():
    return FieldScene(SphereField(radius=0.5, sharpness=40.0))


class TestCamera:
    """Test suite for the pinhole camera."""

    def test_center_ray_looks_at_target(self):
        """Test that the principal point ray points from the eye to the target."""
        camera = orbit_camera(2.0, 0.0, 0.0, 17, 17, target=(0.0, 0.0, 0.0))
        origins, directions = generate_rays(camera, [[8, 8]])
        np.testing.assert_allclose(origins[0], [0.0, 0.0, 2.0], atol=1e-12)
        np.testing.assert_allclose(directions[0], [0.0, 0.0, -1.0], atol=1e-12)

    def test_directions_are_unit(self):
        """Test unit ray directions over the whole image."""
        camera = orbit_camera(2.6, 0.3, 0.1, 12, 10)
        _, directions = generate_rays(camera, camera.pixel_grid())
        np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0, atol=1e-12)

    def test_pixel_grid_order(self):
        """Test row-major (u, v) order."""
        camera = orbit_camera(2.0, 0.0, 0.0, 3, 2)
        np.testing.assert_array_equal(camera.pixel_grid(), [[0, 0], [1, 0], [2, 0], [0, 1], [1, 1], [2, 1]])

    def test_pixel_outside_image(self):
        """Test that a pixel beyond the image raises ContractError."""
        camera = orbit_camera(2.0, 0.0, 0.0, 8, 8)
        with pytest.raises(ContractError, match="outside"):
            generate_rays(camera, [[8, 0]])

    def test_non_orthonormal_rotation(self):
        """Test that a scaled rotation block is refused."""
        pose = look_at([0, 0, 2])
        pose[:3, :3] *= 1.1
        with pytest.raises(ContractError, match="orthonormal"):
            Camera(10.0, 10.0, 4.0, 4.0, pose, 8, 8)

    def test_dict_round_trip(self):
        """Test camera serialization."""
        camera = orbit_camera(2.6, 0.2, -0.1, 16, 12)
        again = Camera.from_dict(camera.to_dict())
        np.testing.assert_allclose(again.world_from_camera, camera.world_from_camera)
        assert (again.width, again.height, again.fx) == (16, 12, camera.fx)


class TestRenderConfig:
    """Test suite for ray bounds and sampling."""

    def test_invalid_bounds(self):
        """Test that near must be positive and below far."""
        with pytest.raises(ContractError):
            RenderConfig(near=2.0, far=1.0)
        with pytest.raises(ContractError):
            RenderConfig(near=0.0, far=1.0)

    def test_from_settings_wraps_scene(self):
        """Test default bounds around the scene sphere."""
        cfg = RenderConfig.from_settings(RenderSettings(scene_radius=0.8, margin=0.1), 2.6)
        assert cfg.near == pytest.approx(2.6 - 0.88)
        assert cfg.far == pytest.approx(2.6 + 0.88)

    def test_from_settings_explicit_bounds(self):
        """Test that explicit near/far override the scene sphere."""
        cfg = RenderConfig.from_settings(RenderSettings(near=1.0, far=3.0), 2.6, n_samples=5)
        assert (cfg.near, cfg.far, cfg.n_samples) == (1.0, 3.0, 5)

    def test_stratified_samples_stay_in_bins(self):
        """Test one ascending sample per bin."""
        cfg = RenderConfig(near=1.0, far=2.0, n_samples=10)
        t = sample_points(50, cfg, np.random.default_rng(0))
        bins = np.floor((t - 1.0) / 0.1).astype(int)
        np.testing.assert_array_equal(bins, np.broadcast_to(np.arange(10), t.shape))

    def test_midpoints_without_stratification(self):
        """Test deterministic bin midpoints."""
        cfg = RenderConfig(near=1.0, far=2.0, n_samples=4, stratified=False)
        np.testing.assert_allclose(sample_points(2, cfg)[0], [1.125, 1.375, 1.625, 1.875])


class TestQuadrature:
    """Test suite for occupancy weights and compositing."""

    def test_weights_match_brute_force(self):
        """Test w_i = o_i · prod_{j<i}(1 − o_j) against an O(K²) loop."""
        o = np.random.default_rng(0).uniform(0, 1, (6, 12))
        with precision(np.float64):
            w, transmittance = accumulate_weights(Tensor(o))
        np.testing.assert_allclose(w.data, brute_force_weights(o), atol=1e-12)
        np.testing.assert_allclose(transmittance.data, np.prod(1 - o, axis=1), atol=1e-12)

    def test_weights_sum_at_most_one(self):
        """Test Σw ≤ 1 and Σw = 1 − T."""
        o = np.random.default_rng(1).uniform(0, 1, (100, 32))
        with precision(np.float64):
            w, transmittance = accumulate_weights(Tensor(o))
        total = w.data.sum(axis=1)
        assert (total <= 1.0 + 1e-12).all()
        np.testing.assert_allclose(total, 1.0 - transmittance.data, atol=1e-12)

    def test_streamed_chunks(self):
        """Test that chunked accumulation with carried transmittance is exact."""
        o = np.random.default_rng(2).uniform(0, 1, (4, 10))
        with precision(np.float64):
            whole, _ = accumulate_weights(Tensor(o))
            first, t1 = accumulate_weights(Tensor(o[:, :6]))
            second, _ = accumulate_weights(Tensor(o[:, 6:]), t1)
        np.testing.assert_allclose(np.concatenate([first.data, second.data], 1), whole.data, atol=1e-12)

    def test_empty_ray_shows_background(self):
        """Test that zero occupancy composites to the background."""
        w, _ = accumulate_weights(np.zeros((2, 5)))
        rgb, acc = composite(w, Tensor(np.full((2, 5, 3), 0.2)), (1.0, 0.5, 0.0))
        np.testing.assert_allclose(rgb.data, [[1.0, 0.5, 0.0]] * 2)
        np.testing.assert_allclose(acc.data, 0.0)

    def test_opaque_first_sample(self):
        """Test that an opaque first sample hides everything behind it."""
        o = np.array([[1.0, 1.0, 1.0]])
        colors = np.array([[[0.1, 0.2, 0.3], [0.9, 0.9, 0.9], [0.5, 0.5, 0.5]]])
        w, _ = accumulate_weights(o)
        rgb, acc = composite(w, Tensor(colors), (1.0, 1.0, 1.0))
        np.testing.assert_allclose(rgb.data, [[0.1, 0.2, 0.3]], atol=1e-6)
        assert acc.item() == pytest.approx(1.0)


class TestSurfacePoints:
    """Test suite for surface-point location."""

    def test_linear_interpolation(self):
        """Test the interpolated depth of the first upward 0.5 crossing."""
        t = np.array([[1.0, 2.0, 3.0, 4.0]])
        o = np.array([[0.1, 0.3, 0.7, 0.9]])
        hits = find_surface_points(t, o)
        assert hits.hit[0]
        assert hits.t[0] == pytest.approx(2.5)

    def test_first_crossing_wins(self):
        """Test that a later second crossing is ignored."""
        t = np.arange(6.0)[None]
        o = np.array([[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]])
        assert find_surface_points(t, o).t[0] == pytest.approx(0.5)

    def test_no_crossing(self):
        """Test rays that never rise through 0.5."""
        t = np.arange(4.0)[None].repeat(2, 0)
        o = np.array([[0.1, 0.2, 0.3, 0.4], [0.9, 0.8, 0.7, 0.6]])
        hits = find_surface_points(t, o)
        assert not hits.hit.any()
        assert np.isnan(hits.t).all()

    def test_interpolate_returns_hit_rows(self):
        """Test per-sample value interpolation restricted to hitting rays."""
        t = np.arange(3.0)[None].repeat(2, 0)
        o = np.array([[0.0, 1.0, 1.0], [0.0, 0.0, 0.0]])
        values = np.arange(18.0).reshape(2, 3, 3)
        out = find_surface_points(t, o).interpolate(values)
        np.testing.assert_allclose(out, [[1.5, 2.5, 3.5]])

    def test_single_ray_point(self):
        """Test the surface point of one ray in world space."""
        point = find_surface_point([0, 0, 0], [0, 0, 1], [1.0, 2.0], [0.0, 1.0])
        np.testing.assert_allclose(point, [0.0, 0.0, 1.5])
        assert find_surface_point([0, 0, 0], [0, 0, 1], [1.0, 2.0], [0.0, 0.1]) is None


class TestRendering:
    """Test suite for rendering scenes."""

    def test_ray_hits_sphere_surface(self, sphere_scene):
        """Test the surface depth of a ray aimed at a sphere."""
        cfg = RenderConfig(near=1.0, far=3.0, n_samples=128, stratified=False)
        batch = render_rays(sphere_scene, [[0.0, 0.0, 2.0]], [[0.0, 0.0, -1.0]], cfg)
        hits = batch.surface()
        assert hits.hit[0]
        assert hits.t[0] == pytest.approx(1.5, abs=2.0 / 128)
        np.testing.assert_allclose(hits.interpolate(batch.canonical)[0], [0.0, 0.0, 0.5], atol=2.0 / 128)

    def test_ray_missing_sphere(self, sphere_scene):
        """Test that a ray passing beside the sphere shows the background."""
        cfg = RenderConfig(near=1.0, far=3.0, n_samples=32, stratified=False, background=(0.0, 1.0, 0.0))
        rgb, acc = render_ray([2.0, 0.0, 2.0], [0.0, 0.0, -1.0], sphere_scene, cfg)
        np.testing.assert_allclose(rgb, [0.0, 1.0, 0.0], atol=1e-4)
        assert acc < 1e-4

    def test_sphere_is_opaque(self, sphere_scene):
        """Test full accumulation through the sphere center."""
        cfg = RenderConfig(near=1.0, far=3.0, n_samples=64)
        _, acc = render_ray([0.0, 0.0, 2.0], [0.0, 0.0, -1.0], sphere_scene, cfg, np.random.default_rng(0))
        assert acc > 0.999

    def test_frame_independent_of_workers(self, sphere_scene):
        """Test identical images with one and three worker threads."""
        camera = orbit_camera(2.0, 0.0, 0.0, 12, 12, target=(0.0, 0.0, 0.0))
        cfg = RenderConfig(near=1.0, far=3.0, n_samples=16, chunk=20)
        one = render_frame(camera, sphere_scene, cfg, seed=5, workers=1)
        three = render_frame(camera, sphere_scene, cfg, seed=5, workers=3)
        np.testing.assert_array_equal(one.image, three.image)
        np.testing.assert_array_equal(one.hit, three.hit)

    def test_frame_outputs(self, sphere_scene):
        """Test image range, silhouette and depths of a rendered frame."""
        camera = orbit_camera(2.0, 0.0, 0.0, 16, 16, target=(0.0, 0.0, 0.0))
        cfg = RenderConfig(near=1.0, far=3.0, n_samples=32, stratified=False)
        frame = render_frame(camera, sphere_scene, cfg)
        assert frame.image.shape == (16, 16, 3)
        assert frame.image.min() >= 0.0 and frame.image.max() <= 1.0
        assert frame.hit[8, 8] and not frame.hit[0, 0]
        assert frame.depth[8, 8] == pytest.approx(1.5, abs=0.1)
        assert np.isnan(frame.depth[0, 0])
        assert frame.alpha[0, 0] < 0.01
