"""
Unit tests for the camera, footprints, renderer and image metrics.
"""

import math

import numpy as np
import pytest

from src.neural_weave.domain.enums import KernelShape, LightKind
from src.neural_weave.domain.exceptions import ImageDimensionError, MissingLatentError, SceneFormatError
from src.neural_weave.domain.models import FabricParams, MaterialLatent
from src.neural_weave.rendering.camera import PinholeCamera
from src.neural_weave.rendering.footprint import footprints_from_hits
from src.neural_weave.rendering.metrics import absolute_error, adjacent_frame_mse, error_heat_map, image_mse
from src.neural_weave.rendering.renderer import (
    NeuralEstimator,
    ReferenceEstimator,
    Renderer,
    estimator_params,
    estimator_specs,
    shading_frame,
)
from src.neural_weave.rendering.scene import Hit, Light, Scene
from src.neural_weave.config import RenderConfig
from tests.conftest import SMALL_NETWORK


class ConstantEstimator:
    """Returns the same component quad for every shading point."""

    def __init__(self, quad, params: FabricParams):
        self.quad = np.asarray(quad, dtype=np.float64)
        self.params = params
        self.calls = 0

    def validate(self, material_ids):
        pass

    def estimate(self, material_id, footprints, omega_i, omega_o, seed, indices):
        self.calls += 1
        return np.tile(self.quad, (len(footprints), 1))

    def params_for(self, material_id):
        return self.params


class FixedMaps:
    def __init__(self, maps):
        self.maps = maps

    def maps_for(self, spec):
        return self.maps


def overhead_scene(scene: Scene, distance: float = 2.0, size: int = 9) -> Scene:
    camera = PinholeCamera(position=(0.0, 0.0, distance), look_at=(0.0, 0.0, 0.0), fov=30.0, width=size, height=size)
    return scene.with_camera(camera)


def center_footprint(scene: Scene, uv_scale: float = 1.0):
    camera = scene.camera
    rays = camera.generate_rays([camera.width // 2], [camera.height // 2])
    hit = scene.intersect(rays.origins, rays.directions)
    return footprints_from_hits(hit, rays, camera, uv_scale)


@pytest.mark.unit
class TestPinholeCamera:
    """Test ray generation."""

    def test_center_pixel_looks_forward(self):
        camera = PinholeCamera(position=(0.0, 0.0, 3.0), look_at=(0.0, 0.0, 0.0), width=9, height=9)

        rays = camera.generate_rays([4], [4])

        assert np.allclose(rays.directions[0], [0.0, 0.0, -1.0], atol=1e-12)

    def test_differentials_are_one_pixel_apart(self):
        camera = PinholeCamera(position=(0.0, 0.0, 3.0), look_at=(0.0, 0.0, 0.0), width=9, height=9)

        rays = camera.generate_rays([4], [4])
        angle = math.acos(float(np.dot(rays.directions[0], rays.dx_directions[0])))

        assert angle == pytest.approx(math.atan(camera.pixel_angle), rel=1e-3)
        assert rays.dy_directions[0, 1] < rays.directions[0, 1]

    def test_pixel_angle(self):
        camera = PinholeCamera(position=(0.0, 0.0, 1.0), look_at=(0.0, 0.0, 0.0), fov=60.0, width=100, height=50)

        assert camera.pixel_angle == pytest.approx(2.0 * math.tan(math.radians(30.0)) / 50)

    def test_pixel_coordinates_are_row_major(self):
        camera = PinholeCamera(position=(0.0, 0.0, 1.0), look_at=(0.0, 0.0, 0.0), width=4, height=3)

        px, py = camera.pixel_coordinates(np.array([0, 3, 4, 11]))

        assert px.tolist() == [0, 3, 0, 3]
        assert py.tolist() == [0, 0, 1, 2]

    def test_with_distance_keeps_direction(self):
        camera = PinholeCamera(position=(1.0, 2.0, 2.0), look_at=(0.0, 0.0, 0.0))

        moved = camera.with_distance(6.0)

        assert moved.distance == pytest.approx(6.0)
        assert np.allclose(moved.basis[0], camera.basis[0])

    @pytest.mark.parametrize("kwargs", [
        dict(fov=0.0),
        dict(fov=180.0),
        dict(width=0),
        dict(look_at=(0.0, 0.0, 1.0)),
        dict(up=(0.0, 0.0, 1.0)),
    ])
    def test_invalid_camera(self, kwargs):
        params = dict(position=(0.0, 0.0, 1.0), look_at=(0.0, 0.0, 0.0))
        params.update(kwargs)

        with pytest.raises(SceneFormatError):
            PinholeCamera(**params)


@pytest.mark.unit
class TestFootprints:
    """Test ray-differential footprints."""

    def test_head_on_size_matches_pixel_spread(self, quad_scene):
        scene = overhead_scene(quad_scene, distance=2.0)

        batch = center_footprint(scene)

        # the quad spans two world units per UV unit
        expected = 2.0 * scene.camera.pixel_angle / 2.0
        assert not batch.fallback[0]
        assert batch.sizes[0] == pytest.approx(expected, rel=1e-2)

    def test_size_grows_with_distance(self, quad_scene):
        near = center_footprint(overhead_scene(quad_scene, distance=1.0)).sizes[0]
        far = center_footprint(overhead_scene(quad_scene, distance=3.0)).sizes[0]

        assert far == pytest.approx(3.0 * near, rel=2e-2)

    def test_uv_scale_multiplies_size_and_wraps_centers(self, quad_scene):
        scene = overhead_scene(quad_scene)

        base = center_footprint(scene, uv_scale=1.0)
        scaled = center_footprint(scene, uv_scale=8.0)

        assert scaled.sizes[0] == pytest.approx(8.0 * base.sizes[0], rel=1e-9)
        assert np.all((scaled.centers >= 0.0) & (scaled.centers < 1.0))
        assert np.allclose(scaled.centers[0], np.mod(base.centers[0] * 8.0, 1.0))

    def test_kernel_is_carried(self, quad_scene):
        scene = overhead_scene(quad_scene)
        rays = scene.camera.generate_rays([4], [4])
        hit = scene.intersect(rays.origins, rays.directions)

        batch = footprints_from_hits(hit, rays, scene.camera, kernel=KernelShape.GAUSSIAN)

        assert batch.footprints()[0].kernel == KernelShape.GAUSSIAN

    def test_degenerate_derivatives_fall_back(self, quad_scene):
        scene = overhead_scene(quad_scene)
        rays = scene.camera.generate_rays([4], [4])
        hit = scene.intersect(rays.origins, rays.directions)
        hit.dpdu[:] = 0.0

        batch = footprints_from_hits(hit, rays, scene.camera)

        assert batch.fallback[0]
        assert np.isfinite(batch.sizes[0]) and batch.sizes[0] > 0.0


@pytest.mark.unit
class TestShadingFrame:
    """Test the local frame at a hit."""

    def make_hit(self, dpdu):
        hit = Hit.empty(1)
        hit.t[:] = 1.0
        hit.normal[:] = [0.0, 0.0, 1.0]
        hit.dpdu[:] = dpdu
        hit.dpdv[:] = [0.0, 1.0, 0.0]
        hit.object_index[:] = 0
        return hit

    def test_frame_is_orthonormal(self):
        frame = shading_frame(self.make_hit([1.0, 0.2, 0.3]), np.array([[0.0, 0.0, 1.0]]))

        assert np.allclose(frame[0] @ frame[0].T, np.eye(3), atol=1e-12)
        assert np.allclose(frame[0, 2], [0.0, 0.0, 1.0])

    def test_frame_flips_to_viewer_side(self):
        frame = shading_frame(self.make_hit([1.0, 0.0, 0.0]), np.array([[0.0, 0.3, -1.0]]))

        assert np.allclose(frame[0, 2], [0.0, 0.0, -1.0])
        assert np.linalg.det(frame[0]) == pytest.approx(1.0)

    def test_degenerate_tangent(self):
        frame = shading_frame(self.make_hit([0.0, 0.0, 0.0]), np.array([[0.0, 0.0, 1.0]]))

        assert np.allclose(frame[0] @ frame[0].T, np.eye(3), atol=1e-12)


@pytest.mark.unit
class TestRenderer:
    """Test the direct-illumination render loop."""

    def directional(self, scene: Scene, intensity=(1.0, 1.0, 1.0)) -> Scene:
        light = Light(kind=LightKind.DIRECTIONAL, intensity=intensity, direction=(0.0, 0.0, -1.0))
        return scene.with_light(light)

    def test_constant_quad_gives_albedo_color(self, quad_scene):
        scene = self.directional(overhead_scene(quad_scene))
        params = estimator_params(scene)['cloth']
        estimator = ConstantEstimator([1.0, 0.0, 0.0, 0.0], params)

        image = Renderer(estimator, RenderConfig(pixel_chunk=16)).render(scene)

        assert image.shape == (9, 9, 3)
        assert image.dtype == np.float32
        assert np.allclose(image[4, 4], params.k_d_warp, atol=1e-6)

    def test_misses_get_background(self, quad_scene):
        scene = self.directional(overhead_scene(quad_scene, distance=20.0, size=9))
        scene = Scene(scene.camera, scene.light, scene.objects, scene.materials, background=(0.1, 0.2, 0.3))
        estimator = ConstantEstimator([1.0, 0.0, 0.0, 0.0], estimator_params(scene)['cloth'])

        image = Renderer(estimator).render(scene)

        # the 2x2 quad covers only the middle of the frame from 20 units away
        assert np.allclose(image[0, 0], [0.1, 0.2, 0.3])
        assert not np.allclose(image[4, 4], [0.1, 0.2, 0.3])

    def test_image_scales_with_light_intensity(self, quad_scene):
        scene = overhead_scene(quad_scene)
        estimator = ConstantEstimator([0.2, 0.1, 0.05, 0.01], estimator_params(scene)['cloth'])
        renderer = Renderer(estimator)

        base = renderer.render(scene)
        doubled = renderer.render(scene.with_light(scene.light.scaled(2.0)))

        assert np.allclose(doubled, 2.0 * base, rtol=1e-6)

    def test_chunks_cover_every_pixel(self, quad_scene):
        scene = self.directional(overhead_scene(quad_scene, size=9))
        estimator = ConstantEstimator([1.0, 1.0, 0.0, 0.0], estimator_params(scene)['cloth'])

        small = Renderer(estimator, RenderConfig(pixel_chunk=7)).render(scene)
        large = Renderer(estimator, RenderConfig(pixel_chunk=4096)).render(scene)

        assert np.allclose(small, large, rtol=1e-6, atol=0.0)

    def test_missing_latent_raises(self, quad_scene, small_model):
        estimator = NeuralEstimator(small_model, {}, estimator_params(quad_scene))

        with pytest.raises(MissingLatentError, match="no encoded latent"):
            Renderer(estimator).render(quad_scene)

    def test_neural_render_is_finite(self, quad_scene, small_model):
        latent = MaterialLatent(np.linspace(-1.0, 1.0, SMALL_NETWORK['latent_size']))
        estimator = NeuralEstimator(small_model, {'cloth': latent}, estimator_params(quad_scene))

        image = Renderer(estimator).render(quad_scene)

        assert image.shape == (8, 8, 3)
        assert np.all(np.isfinite(image))
        assert np.all(image >= 0.0)

    def test_reference_render_is_thread_independent(self, quad_scene, plain_maps):
        estimator = ReferenceEstimator(
            FixedMaps(plain_maps), estimator_specs(quad_scene), estimator_params(quad_scene), spp=4
        )
        config = RenderConfig(pixel_chunk=8)

        single = Renderer(estimator, config, threads=1).render(quad_scene, seed=3)
        pooled = Renderer(estimator, config, threads=3).render(quad_scene, seed=3)

        assert np.array_equal(single, pooled)

    def test_reference_render_depends_on_seed(self, quad_scene, plain_maps):
        estimator = ReferenceEstimator(
            FixedMaps(plain_maps), estimator_specs(quad_scene), estimator_params(quad_scene), spp=4
        )
        renderer = Renderer(estimator, RenderConfig(pixel_chunk=64))

        assert not np.array_equal(renderer.render(quad_scene, seed=1), renderer.render(quad_scene, seed=2))


@pytest.mark.unit
class TestMetrics:
    """Test image comparison helpers."""

    def test_mse(self):
        a = np.zeros((2, 2, 3))
        b = np.full((2, 2, 3), 0.5)

        assert image_mse(a, b) == pytest.approx(0.25)
        assert image_mse(a, a) == 0.0

    def test_absolute_error_averages_channels(self):
        a = np.zeros((2, 3, 3))
        b = np.zeros((2, 3, 3))
        b[0, 0] = [0.3, 0.6, 0.0]

        error = absolute_error(a, b)

        assert error.shape == (2, 3)
        assert error[0, 0] == pytest.approx(0.3)

    def test_mismatched_dimensions(self):
        with pytest.raises(ImageDimensionError):
            image_mse(np.zeros((2, 2, 3)), np.zeros((3, 2, 3)))

    def test_heat_map(self):
        a = np.zeros((4, 5, 3))
        b = np.zeros((4, 5, 3))
        b[1, 2] = 1.0

        heat = error_heat_map(a, b)

        assert heat.shape == (4, 5, 3)
        assert heat.dtype == np.uint8
        assert not np.array_equal(heat[1, 2], heat[0, 0])

    def test_heat_map_of_identical_images_is_uniform(self):
        heat = error_heat_map(np.ones((3, 3, 3)), np.ones((3, 3, 3)))

        assert np.all(heat == heat[0, 0])

    def test_adjacent_frame_mse(self):
        frames = [np.zeros((2, 2, 3)), np.ones((2, 2, 3)), np.ones((2, 2, 3))]

        assert adjacent_frame_mse(frames) == [1.0, 0.0]
