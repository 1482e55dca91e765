"""
Integration tests for rendering through the container: reference and
neural modes, edits, zoom sweeps and file comparison.
"""

import numpy as np
import pytest

from src.neural_weave.container import Container
from src.neural_weave.domain.enums import EditPath, RenderMode
from src.neural_weave.domain.exceptions import RenderError
from src.neural_weave.rendering.metrics import image_mse


@pytest.mark.integration
class TestReferenceRendering:
    """Test oracle-driven rendering."""

    def test_light_linearity(self, test_container, quad_scene):
        service = test_container.reference_render_service
        brighter = quad_scene.with_light(quad_scene.light.scaled(3.0))

        base = service.render(quad_scene, RenderMode.REFERENCE, seed=4)
        tripled = service.render(brighter, RenderMode.REFERENCE, seed=4)

        assert np.allclose(tripled, 3.0 * base, rtol=1e-5, atol=1e-7)
        assert base.max() > 0.0

    def test_thread_count_does_not_change_pixels(self, test_config, quad_scene):
        single = Container(config=test_config).reference_render_service.render(quad_scene, RenderMode.REFERENCE, seed=1)
        test_config.threads = 2
        pooled = Container(config=test_config).reference_render_service.render(quad_scene, RenderMode.REFERENCE, seed=1)

        assert np.array_equal(single, pooled)

    def test_resolution_override(self, test_container, quad_scene):
        image = test_container.reference_render_service.render(quad_scene, RenderMode.REFERENCE, resolution=(6, 4))

        assert image.shape == (4, 6, 3)

    def test_zoom_sweep(self, test_container, quad_scene):
        sweep = test_container.reference_render_service.zoom_sweep(quad_scene, [2.0, 3.0], RenderMode.REFERENCE, seed=2)

        assert len(sweep.frames) == 2
        assert len(sweep.adjacent_mse) == 1
        assert sweep.mean_adjacent_mse == sweep.adjacent_mse[0]

    def test_zoom_sweep_needs_two_distances(self, test_container, quad_scene):
        with pytest.raises(RenderError):
            test_container.reference_render_service.zoom_sweep(quad_scene, [2.0], RenderMode.REFERENCE)

    def test_neural_mode_needs_model(self, test_container, quad_scene):
        with pytest.raises(RenderError, match="trained model"):
            test_container.reference_render_service.render(quad_scene, RenderMode.NEURAL)

    @pytest.mark.slow
    def test_more_samples_converge_toward_reference(self, test_container, quad_scene):
        """Per-pixel variance and error against a 256 spp render both drop from 1 to 16 spp."""
        service = test_container.reference_render_service
        truth = service.render(quad_scene, RenderMode.REFERENCE, spp=256, seed=1000)

        coarse = np.stack([service.render(quad_scene, RenderMode.REFERENCE, spp=1, seed=s) for s in range(4)])
        fine = np.stack([service.render(quad_scene, RenderMode.REFERENCE, spp=16, seed=s) for s in range(4)])

        assert coarse.var(axis=0).mean() > fine.var(axis=0).mean()
        coarse_mse = np.mean([image_mse(frame, truth) for frame in coarse])
        fine_mse = np.mean([image_mse(frame, truth) for frame in fine])
        assert coarse_mse > fine_mse

    def test_save_and_compare_files(self, test_container, quad_scene, tmp_path):
        service = test_container.reference_render_service
        image = service.render(quad_scene, RenderMode.REFERENCE, seed=0)

        png = service.save(image, tmp_path / "frame")
        result = service.compare_files(tmp_path / "frame.npy", tmp_path / "frame.npy", tmp_path / "diff.png")

        assert png == tmp_path / "frame.png"
        assert png.exists()
        assert result.mse == 0.0
        assert (tmp_path / "diff.png").exists()


@pytest.mark.integration
class TestNeuralRendering:
    """Test rendering with an untrained network injected into the container."""

    @pytest.fixture
    def neural_container(self, test_config, small_model):
        container = Container(config=test_config)
        container.override_dependency('model', small_model)
        return container

    def test_render_encodes_materials(self, neural_container, quad_scene):
        image = neural_container.render_service.render(quad_scene)

        assert image.shape == (8, 8, 3)
        assert np.all(np.isfinite(image))
        assert 'cloth' in neural_container.editing_service.cache

    def test_edit_matches_cold_start(self, neural_container, test_config, small_model, quad_scene):
        neural_container.render_service.render(quad_scene)

        edited, results = neural_container.editing_service.apply_edits(quad_scene, {'cloth': {'roughness': 0.8}})
        warm = neural_container.render_service.render(edited)

        cold_container = Container(config=test_config)
        cold_container.override_dependency('model', small_model)
        cold = cold_container.render_service.render(edited)

        assert results[0].path == EditPath.RE_ENCODE
        assert np.allclose(warm, cold, atol=1e-6)

    def test_albedo_edit_skips_encoder(self, neural_container, small_model, quad_scene, mocker):
        neural_container.render_service.render(quad_scene)
        before = neural_container.editing_service.cache.get('cloth').latent
        spy = mocker.spy(small_model, 'encode')

        edited, results = neural_container.editing_service.apply_edits(
            quad_scene, {'cloth': {'k_d_warp': [0.1, 0.1, 0.9]}}
        )
        image = neural_container.render_service.render(edited)

        assert results[0].path == EditPath.NO_ENCODE
        assert spy.call_count == 0
        assert neural_container.editing_service.cache.get('cloth').latent is before
        assert np.all(np.isfinite(image))

    def test_encoder_runs_once_per_material(self, neural_container, small_model, quad_scene):
        calls = small_model.encode_calls

        neural_container.render_service.render(quad_scene)
        neural_container.render_service.render(quad_scene)

        assert small_model.encode_calls == calls + 1
