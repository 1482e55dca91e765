"""
Unit tests for the file-format repositories.
"""

import json
from pathlib import Path

import numpy as np
import pytest
import torch

from src.neural_weave.domain.enums import KernelShape
from src.neural_weave.domain.exceptions import (
    DatasetFormatError,
    DatasetMergeError,
    DatasetTruncatedError,
    DomainValidationError,
    GeometryError,
    ImageDimensionError,
    SceneFormatError,
    TopologyMismatchError,
    WeightFormatError,
)
from src.neural_weave.domain.models import DatasetHeader, MaterialLatent, MaterialSpec, QueryRecord
from src.neural_weave.config import NetworkConfig
from src.neural_weave.network.model import NeuralFabricModel
from src.neural_weave.repositories.dataset_repository import DatasetRepository, empty_records, records_from_queries
from src.neural_weave.repositories.geometry_repository import GeometryRepository
from src.neural_weave.repositories.image_repository import ImageRepository, tone_map
from src.neural_weave.repositories.latent_repository import LatentRepository
from src.neural_weave.repositories.scene_repository import SceneRepository
from src.neural_weave.repositories.weights_repository import WeightsRepository
from tests.conftest import ENCODER_RESOLUTION, SMALL_NETWORK

SCENES_DIR = Path(__file__).resolve().parents[2] / "scenes"


def make_header(material_spec: MaterialSpec, seed: int = 0, samples: int = 64) -> DatasetHeader:
    return DatasetHeader(material=material_spec, kernel=KernelShape.BOX, w=0.5, samples=samples, seed=seed, resolution=32)


def make_records(indices, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    records = empty_records(len(indices))
    records['query_index'] = indices
    records['center'] = rng.random((len(indices), 2))
    records['size'] = rng.random(len(indices))
    records['omega_i'] = [0.0, 0.6, 0.8]
    records['omega_i'][::2] = [0.0, 0.6, -0.8]
    records['omega_o'] = [0.0, 0.0, 1.0]
    records['target'] = rng.random((len(indices), 4))
    return records


@pytest.mark.unit
class TestDatasetRepository:
    """Test the WWDS dataset format."""

    def setup_method(self):
        self.repo = DatasetRepository()

    def test_write_then_read(self, tmp_path, material_spec):
        header = make_header(material_spec, seed=3)
        records = make_records(np.arange(10))
        path = self.repo.write(tmp_path / "m.wwds", header, records)

        loaded_header, loaded = self.repo.read(path)

        assert loaded_header == header
        assert loaded.tobytes() == records.tobytes()
        assert not (tmp_path / "m.wwds.tmp").exists()

    def test_iter_records_yields_query_records(self, tmp_path, material_spec):
        path = self.repo.write(tmp_path / "m.wwds", make_header(material_spec), make_records([4, 5]))

        records = list(self.repo.iter_records(path))

        assert [r.query_index for r in records] == [4, 5]
        assert isinstance(records[0], QueryRecord)
        assert records[0].footprint.kernel == KernelShape.BOX

    def test_records_from_queries_packs_fields(self, tmp_path, material_spec):
        path = self.repo.write(tmp_path / "m.wwds", make_header(material_spec), make_records([1, 2, 3]))
        queries = list(self.repo.iter_records(path))

        packed = records_from_queries(queries)

        assert np.array_equal(packed['query_index'], [1, 2, 3])
        assert np.allclose(packed['target'], self.repo.read(path)[1]['target'])

    def test_truncated_file(self, tmp_path, material_spec):
        path = self.repo.write(tmp_path / "m.wwds", make_header(material_spec), make_records(np.arange(8)))
        data = path.read_bytes()
        path.write_bytes(data[:-40])

        with pytest.raises(DatasetTruncatedError):
            self.repo.read(path)

    def test_bad_magic(self, tmp_path, material_spec):
        path = self.repo.write(tmp_path / "m.wwds", make_header(material_spec), make_records([0]))
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))

        with pytest.raises(DatasetFormatError):
            self.repo.read(path)

    def test_corrupted_record_fails_checksum(self, tmp_path, material_spec):
        path = self.repo.write(tmp_path / "m.wwds", make_header(material_spec), make_records(np.arange(4)))
        data = bytearray(path.read_bytes())
        data[-10] ^= 0xFF
        path.write_bytes(bytes(data))

        with pytest.raises(DatasetFormatError, match="checksum"):
            self.repo.read(path)

    def test_merge_orders_by_query_index(self, tmp_path, material_spec):
        header = make_header(material_spec)
        a = self.repo.write(tmp_path / "a.wwds", header, make_records([4, 5, 6], seed=1))
        b = self.repo.write(tmp_path / "b.wwds", header, make_records([0, 1, 2, 3], seed=2))

        count = self.repo.merge_shards([a, b], tmp_path / "merged.wwds")
        _, merged = self.repo.read(tmp_path / "merged.wwds")

        assert count == 7
        assert merged['query_index'].tolist() == list(range(7))

    def test_merge_rejects_mismatched_headers(self, tmp_path, material_spec):
        a = self.repo.write(tmp_path / "a.wwds", make_header(material_spec, seed=1), make_records([0]))
        b = self.repo.write(tmp_path / "b.wwds", make_header(material_spec, seed=2), make_records([1]))

        with pytest.raises(DatasetMergeError, match="disagree"):
            self.repo.merge_shards([a, b], tmp_path / "merged.wwds")

    def test_merge_needs_shards(self, tmp_path):
        with pytest.raises(DatasetMergeError):
            self.repo.merge_shards([], tmp_path / "merged.wwds")

    def test_summarize_splits_brdf_and_btdf(self, tmp_path, material_spec):
        path = self.repo.write(tmp_path / "m.wwds", make_header(material_spec), make_records(np.arange(10)))

        summary = self.repo.summarize(path)

        assert set(summary.index) == {'brdf', 'btdf'}
        assert int(summary['records'].to_numpy().sum()) == 10


@pytest.mark.unit
class TestGeometryRepository:
    """Test the WWGM geometry blob and previews."""

    def test_save_then_load(self, tmp_path, twill_maps):
        repo = GeometryRepository()
        path = repo.save(twill_maps, tmp_path / "twill.wwgm")

        loaded = repo.load(path)

        assert loaded.resolution == twill_maps.resolution
        assert loaded.beta == twill_maps.beta
        assert np.array_equal(loaded.yarn_id, twill_maps.yarn_id)
        assert np.allclose(loaded.normal, twill_maps.normal, atol=1e-6)

    def test_short_file_rejected(self, tmp_path, plain_maps):
        repo = GeometryRepository()
        path = repo.save(plain_maps, tmp_path / "plain.wwgm")
        path.write_bytes(path.read_bytes()[:-1])

        with pytest.raises(GeometryError):
            repo.load(path)

    @pytest.mark.parametrize("channel", ["normal", "orientation", "height", "yarn"])
    def test_png_preview(self, tmp_path, plain_maps, channel):
        from PIL import Image

        path = GeometryRepository().export_png(plain_maps, tmp_path / f"{channel}.png", channel)

        with Image.open(path) as image:
            assert image.size == (plain_maps.resolution, plain_maps.resolution)

    def test_unknown_channel(self, tmp_path, plain_maps):
        with pytest.raises(GeometryError):
            GeometryRepository().export_png(plain_maps, tmp_path / "x.png", "albedo")


@pytest.mark.unit
class TestWeightsRepository:
    """Test the WWNN weight format."""

    def test_save_then_load(self, tmp_path, small_model):
        repo = WeightsRepository()
        path = repo.save(small_model, tmp_path / "w.wwnn")
        torch.manual_seed(1)
        fresh = NeuralFabricModel(NetworkConfig(**SMALL_NETWORK), encoder_resolution=ENCODER_RESOLUTION)

        repo.load_into(fresh, path)

        for name, value in small_model.numpy_state().items():
            assert np.array_equal(fresh.numpy_state()[name], value)

    def test_topology_mismatch(self, tmp_path, small_model):
        repo = WeightsRepository()
        path = repo.save(small_model, tmp_path / "w.wwnn")
        other = NeuralFabricModel(NetworkConfig(**dict(SMALL_NETWORK, latent_size=4)), encoder_resolution=ENCODER_RESOLUTION)

        with pytest.raises(TopologyMismatchError):
            repo.load_into(other, path)

    def test_default_network_fits_storage_bound(self, tmp_path):
        """Full-width weights stay under 5 MB: four bytes per parameter plus names and shapes."""
        model = NeuralFabricModel(NetworkConfig(), encoder_resolution=64)

        size = WeightsRepository().save(model, tmp_path / "w.wwnn").stat().st_size

        assert size < 5 * 1024 * 1024
        assert model.parameter_count() * 4 < size < model.parameter_count() * 4 + 64 * 1024

    def test_truncated_file(self, tmp_path, small_model):
        repo = WeightsRepository()
        path = repo.save(small_model, tmp_path / "w.wwnn")
        path.write_bytes(path.read_bytes()[:-12])

        with pytest.raises(WeightFormatError):
            repo.read_state(path)

    def test_short_hash_rejected(self, tmp_path):
        with pytest.raises(WeightFormatError):
            WeightsRepository().write_state(tmp_path / "w.wwnn", b"short", {})


@pytest.mark.unit
class TestSceneRepository:
    """Test the JSON scene format."""

    def test_load_bundled_scene(self):
        scene = SceneRepository().load(SCENES_DIR / "single_cloth.json")

        assert scene.material_ids() == ['cloth']
        assert scene.materials['cloth'].uv_scale == 8.0
        assert scene.camera.width == 256

    def test_dict_round_trip(self, quad_scene):
        repo = SceneRepository()

        restored = repo.from_dict(repo.to_dict(quad_scene))

        assert restored.materials == quad_scene.materials
        assert restored.light == quad_scene.light
        assert np.array_equal(restored.objects[0].edge_u, quad_scene.objects[0].edge_u)

    def test_unreadable_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")

        with pytest.raises(SceneFormatError):
            SceneRepository().load(path)

    def test_undefined_material(self, tmp_path, quad_scene):
        repo = SceneRepository()
        data = repo.to_dict(quad_scene)
        data['objects'][0]['material'] = 'silk'
        path = tmp_path / "scene.json"
        path.write_text(json.dumps(data))

        with pytest.raises(SceneFormatError):
            repo.load(path)

    def test_invalid_material_parameter(self, tmp_path, quad_scene):
        repo = SceneRepository()
        data = repo.to_dict(quad_scene)
        data['materials']['cloth']['roughness'] = 3.0
        path = tmp_path / "scene.json"
        path.write_text(json.dumps(data))

        with pytest.raises(SceneFormatError):
            repo.load(path)


@pytest.mark.unit
class TestImageRepository:
    """Test image output."""

    def test_tone_map(self):
        image = np.array([[[0.0, 1.0, 4.0]]])

        assert tone_map(image).tolist() == [[[0, 255, 255]]]

    def test_save_render_writes_both_files(self, tmp_path):
        image = np.full((4, 6, 3), 0.25)
        png = ImageRepository().save_render(image, tmp_path / "frame")

        assert png.suffix == '.png'
        assert np.allclose(ImageRepository().load_linear(tmp_path / "frame.npy"), 0.25)

    def test_load_rejects_wrong_shape(self, tmp_path):
        np.save(tmp_path / "gray.npy", np.zeros((4, 4)))

        with pytest.raises(ImageDimensionError):
            ImageRepository().load_linear(tmp_path / "gray.npy")


@pytest.mark.unit
class TestLatentRepository:
    """Test latents.json."""

    def test_save_then_load_is_exact(self, tmp_path, material_spec):
        z = np.random.default_rng(0).normal(size=64).astype(np.float32)
        entries = {'cloth': (MaterialLatent(z), material_spec)}
        repo = LatentRepository()

        loaded = repo.load(repo.save(entries, tmp_path / "latents.json"))

        assert loaded['cloth'][0] == MaterialLatent(z)
        assert loaded['cloth'][1] == material_spec

    def test_corrupted_file(self, tmp_path):
        path = tmp_path / "latents.json"
        path.write_text(json.dumps({'cloth': {'z': [1.0]}}))

        with pytest.raises(DomainValidationError):
            LatentRepository().load(path)
