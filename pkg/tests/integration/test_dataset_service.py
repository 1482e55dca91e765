"""
Integration tests for dataset generation.

Builds real oracle datasets at a small budget and checks record counts,
reproducibility and resuming after an interrupted run.
"""

from unittest.mock import patch

import numpy as np
import pytest

from src.neural_weave.domain.exceptions import DatasetError
from src.neural_weave.repositories.dataset_repository import DatasetRepository
from src.neural_weave.services import dataset_service
from src.neural_weave.services.dataset_service import DatasetService


def assert_same_records(a: np.ndarray, b: np.ndarray) -> None:
    assert a.shape == b.shape
    for name in a.dtype.names:
        assert np.array_equal(a[name], b[name]), name


@pytest.mark.integration
class TestDatasetService:
    """Test per-material dataset builds."""

    @pytest.fixture(autouse=True)
    def setup_service(self, test_container, test_config):
        self.config = test_config
        self.service: DatasetService = test_container.dataset_service
        self.repository = DatasetRepository()

    def test_build_single_material(self, material_spec, tmp_path):
        result = self.service.build_material(material_spec, 0, tmp_path, seed=3)

        assert result.path == tmp_path / "material_000.wwds"
        assert result.records + result.dropped == self.config.dataset_settings.query_budget
        assert result.chunks_computed == 3
        assert result.chunks_reused == 0
        assert not (tmp_path / "material_000.shards").exists()

        header, records = self.repository.read(result.path)
        assert header.material == material_spec
        assert header.samples == self.config.oracle_settings.samples
        assert header.seed == 3
        assert records.shape[0] == result.records
        assert np.all(records['target'] >= 0.0)
        assert np.all(np.isfinite(records['target']))

    def test_same_seed_reproduces_records(self, material_spec, tmp_path):
        first = self.service.build_material(material_spec, 0, tmp_path / "a", seed=5)
        second = self.service.build_material(material_spec, 0, tmp_path / "b", seed=5)

        assert_same_records(self.repository.read(first.path)[1], self.repository.read(second.path)[1])

    def test_resume_after_interruption(self, material_spec, tmp_path):
        real_job = dataset_service.run_target_job
        calls = []

        def interrupted(job):
            calls.append(job)
            if len(calls) == 2:
                raise RuntimeError("worker killed")
            return real_job(job)

        with patch('src.neural_weave.services.dataset_service.run_target_job', side_effect=interrupted):
            with pytest.raises(RuntimeError):
                self.service.build_material(material_spec, 0, tmp_path / "run", seed=2)

        assert len(list((tmp_path / "run" / "material_000.shards").iterdir())) == 1

        resumed = self.service.build_material(material_spec, 0, tmp_path / "run", seed=2)
        fresh = self.service.build_material(material_spec, 0, tmp_path / "fresh", seed=2)

        assert resumed.chunks_reused == 1
        assert resumed.chunks_computed == 2
        assert_same_records(self.repository.read(resumed.path)[1], self.repository.read(fresh.path)[1])

    def test_unreadable_shard_is_recomputed(self, material_spec, tmp_path):
        shard_dir = tmp_path / "material_000.shards"
        shard_dir.mkdir()
        (shard_dir / "chunk_00000.wwds").write_bytes(b"truncated")

        result = self.service.build_material(material_spec, 0, tmp_path, seed=2)

        assert result.chunks_reused == 0
        assert result.chunks_computed == 3

    def test_sample_materials_covers_every_pattern(self):
        materials = self.service.sample_materials(seed=1)

        assert len(materials) == 7
        assert sorted(m.pattern for m in materials) == list(range(7))

    def test_build_writes_one_file_per_material(self, material_spec, tmp_path):
        materials = [material_spec, material_spec.with_changes(pattern=1)]

        results = self.service.build(materials, tmp_path, seed=1)

        assert [r.path.name for r in results] == ["material_000.wwds", "material_001.wwds"]
        assert self.repository.read_header(results[1].path).material.pattern == 1
        assert "2 materials" in self.repository.read_header(results[0].path).scale_note

    def test_empty_material_list(self, tmp_path):
        with pytest.raises(DatasetError):
            self.service.build([], tmp_path)
