"""
Unit tests for the dependency injection container.

Tests lazy creation, overrides and the weights-file requirement of the
neural services.
"""

from unittest.mock import Mock

import pytest

from src.neural_weave.business.geometry import MapSynthesizer
from src.neural_weave.container import Container, get_container, reset_container, setup_container
from src.neural_weave.domain.exceptions import MissingConfigurationError
from src.neural_weave.repositories.weights_repository import WeightsRepository


@pytest.mark.unit
class TestContainer:
    """Test the dependency injection container."""

    def setup_method(self):
        """Set up for each test."""
        reset_container()

    def teardown_method(self):
        """Clean up after each test."""
        reset_container()

    def test_container_with_config(self, test_config):
        container = Container(config=test_config)

        assert container.config is test_config

    def test_lazy_dependency_creation(self, test_container):
        """Dependencies are created on first access and then shared."""
        assert len(test_container._instances) == 0

        repo = test_container.weights_repository

        assert isinstance(repo, WeightsRepository)
        assert 'weights_repository' in test_container._instances
        assert test_container.weights_repository is repo

    def test_map_synthesizer_uses_pattern_settings(self, test_container, test_config):
        synthesizer = test_container.map_synthesizer

        assert isinstance(synthesizer, MapSynthesizer)
        assert synthesizer.resolution == test_config.pattern_settings.resolution
        assert synthesizer.cache_stats()['max_size'] == test_config.pattern_settings.map_cache_size

    def test_repositories_accessible(self, test_container):
        assert test_container.geometry_repository is not None
        assert test_container.dataset_repository is not None
        assert test_container.scene_repository is not None
        assert test_container.image_repository is not None
        assert test_container.latent_repository is not None

    def test_offline_services_need_no_weights(self, test_container):
        assert test_container.dataset_service is not None
        assert test_container.training_service is not None
        assert test_container.reference_render_service is not None
        assert 'model' not in test_container._instances

    def test_model_requires_weights_file(self, test_container):
        with pytest.raises(MissingConfigurationError, match="Weights file not found"):
            test_container.model

    def test_model_loads_saved_weights(self, test_container, small_model, test_config):
        WeightsRepository().save(small_model, test_config.weights_path)

        model = test_container.model

        assert model.topology_hash() == small_model.topology_hash()

    def test_dependency_override(self, test_container):
        mock_model = Mock()
        test_container.override_dependency('model', mock_model)

        assert test_container.model is mock_model
        assert test_container.editing_service.encoder is mock_model

    def test_dependency_status(self, test_container):
        status = test_container.get_dependency_status()
        assert not any(status.values())

        test_container.scene_repository

        status = test_container.get_dependency_status()
        assert status['scene_repository']
        assert not status['model']

    def test_reset_dependencies(self, test_container):
        test_container.image_repository
        test_container.reset_dependencies()

        assert len(test_container._instances) == 0

    def test_global_container_functions(self, test_config):
        with pytest.raises(RuntimeError):
            get_container()

        container = setup_container(test_config)

        assert get_container() is container

        reset_container()
        with pytest.raises(RuntimeError):
            get_container()
