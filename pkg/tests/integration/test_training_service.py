"""
Integration tests for the training pipeline: dataset files in, weights,
checkpoints and a metrics log out.
"""

import pandas as pd
import pytest

from src.neural_weave.domain.exceptions import DatasetError
from src.neural_weave.repositories.weights_repository import WeightsRepository


@pytest.fixture
def dataset_paths(test_container, material_spec, tmp_path):
    """Two small material datasets built with the real oracle."""
    materials = [material_spec, material_spec.with_changes(pattern=2, roughness=0.8)]
    results = test_container.dataset_service.build(materials, tmp_path / "data", seed=1)
    return [r.path for r in results]


@pytest.mark.integration
@pytest.mark.slow
class TestTrainingService:
    """Test end-to-end training runs."""

    def test_train_writes_artifacts(self, test_container, test_config, dataset_paths, tmp_path):
        run = test_container.training_service.train(dataset_paths)

        assert run.weights_path.exists()
        assert (tmp_path / "checkpoints" / "epoch_01.wwnn").exists()
        assert (tmp_path / "checkpoints" / "epoch_02.wwnn").exists()

        metrics = pd.read_csv(run.metrics_path)
        assert len(metrics) > 0
        assert metrics['epoch'].max() == test_config.training_settings.epochs
        assert run.holdout == {}

        stored_hash, _ = WeightsRepository().read_state(run.weights_path)
        assert stored_hash == test_container.training_service.build_model().topology_hash()

    def test_trained_weights_serve_the_container(self, test_container, dataset_paths):
        test_container.training_service.train(dataset_paths)

        assert test_container.model is not None

    def test_holdout_is_scored(self, test_container, test_config, dataset_paths):
        test_config.training_settings.holdout_fraction = 0.2

        run = test_container.training_service.train(dataset_paths)

        assert set(run.holdout) == {"material_000", "material_001"}
        for score in run.holdout.values():
            assert score['records'] >= 1
            assert score['diffuse_mae'] >= 0.0

    def test_no_datasets(self, test_container):
        with pytest.raises(DatasetError):
            test_container.training_service.train([])
