"""
Pytest configuration and shared fixtures.

Provides small geometry maps, materials, a tiny network and a fast
application config for the entire test suite.
"""

from pathlib import Path
from typing import Tuple

import numpy as np
import pytest

from src.neural_weave.business.geometry import synthesize_geometry_maps
from src.neural_weave.business.weave import build_weave_matrix
from src.neural_weave.config import (
    AppConfig,
    DatasetConfig,
    NetworkConfig,
    OracleConfig,
    PatternConfig,
    RenderConfig,
    TrainingConfig,
)
from src.neural_weave.container import Container, reset_container
from src.neural_weave.domain.enums import LightKind, YarnId
from src.neural_weave.domain.models import FabricParams, GeometryMaps, MaterialSpec, WeaveKind
from src.neural_weave.network.model import NeuralFabricModel
from src.neural_weave.rendering.camera import PinholeCamera
from src.neural_weave.rendering.scene import Light, Quad, Scene, SceneMaterial

SMALL_NETWORK = dict(
    latent_size=8,
    fusion_width=16,
    angular_width=16,
    encoder_widths=(4, 8, 8),
    mlp_width=16,
)
ENCODER_RESOLUTION = 16


# Geometry fixtures
@pytest.fixture(scope="session")
def plain_maps() -> GeometryMaps:
    """Plain weave maps at a small resolution."""
    return synthesize_geometry_maps(build_weave_matrix(WeaveKind.plain()), 0.0, 30.0, 0.2, 1.0, 32)


@pytest.fixture(scope="session")
def twill_maps() -> GeometryMaps:
    """Twill(3) maps, gap 0.2, height scale 1."""
    return synthesize_geometry_maps(build_weave_matrix(WeaveKind.twill(3)), 0.0, 30.0, 0.2, 1.0, 48)


def make_flat_maps(
    resolution: int = 16,
    yarn: YarnId = YarnId.WARP,
    orientation: Tuple[float, float, float] = (1.0, 0.0, 0.0),
    beta: float = 0.0,
) -> GeometryMaps:
    """Synthetic maps: every texel faces straight up with one yarn id and fiber axis."""
    normal = np.zeros((resolution, resolution, 3))
    normal[..., 2] = 1.0
    axis = np.broadcast_to(np.asarray(orientation, dtype=np.float64), (resolution, resolution, 3))
    return GeometryMaps(
        normal=normal,
        orientation=axis,
        height=np.zeros((resolution, resolution)),
        yarn_id=np.full((resolution, resolution), int(yarn), dtype=np.uint8),
        beta=beta,
        radius_warp=0.2,
        radius_weft=0.2,
    )


@pytest.fixture
def flat_maps() -> GeometryMaps:
    """Flat all-warp maps with no self-shadowing."""
    return make_flat_maps()


# Material fixtures
@pytest.fixture
def material_spec() -> MaterialSpec:
    return MaterialSpec(pattern=0, twist=0.0, inclination=30.0, roughness=0.5, height_scale=1.0)


@pytest.fixture
def fabric_params(material_spec: MaterialSpec) -> FabricParams:
    return FabricParams.from_material(material_spec)


# Network fixtures
@pytest.fixture
def small_network_config() -> NetworkConfig:
    return NetworkConfig(**SMALL_NETWORK)


@pytest.fixture
def small_model(small_network_config: NetworkConfig) -> NeuralFabricModel:
    """Tiny untrained model with a 16x16 encoder input."""
    import torch

    torch.manual_seed(0)
    return NeuralFabricModel(small_network_config, encoder_resolution=ENCODER_RESOLUTION).eval()


# Configuration fixtures
@pytest.fixture
def test_config(tmp_path: Path) -> AppConfig:
    """Application config sized for fast tests, writing under tmp_path."""
    return AppConfig(
        pattern_settings=PatternConfig(resolution=16, encoder_resolution=ENCODER_RESOLUTION, map_cache_size=4),
        oracle_settings=OracleConfig(samples=16),
        dataset_settings=DatasetConfig(
            query_budget=300,
            augmentation_fraction=0.1,
            chunk_size=128,
            materials_per_pattern=1,
            output_dir=str(tmp_path / "data"),
        ),
        network_settings=NetworkConfig(**SMALL_NETWORK),
        training_settings=TrainingConfig(
            epochs=2,
            batch_size=32,
            milestones=(1,),
            checkpoint_dir=str(tmp_path / "checkpoints"),
            metrics_file=str(tmp_path / "metrics.csv"),
        ),
        render_settings=RenderConfig(width=8, height=8, spp=4, pixel_chunk=16),
        weights_path=str(tmp_path / "weights.wwnn"),
        seed=7,
    )


@pytest.fixture
def test_container(test_config: AppConfig) -> Container:
    """Create a fresh container for each test."""
    reset_container()
    return Container(config=test_config)


# Scene fixtures
@pytest.fixture
def cloth_material(material_spec: MaterialSpec) -> SceneMaterial:
    return SceneMaterial(
        spec=material_spec,
        k_d_warp=(0.6, 0.2, 0.1),
        k_d_weft=(0.7, 0.7, 0.6),
        k_s_warp=(0.3, 0.3, 0.3),
        k_s_weft=(0.2, 0.2, 0.2),
        uv_scale=4.0,
    )


@pytest.fixture
def quad_scene(cloth_material: SceneMaterial) -> Scene:
    """A 2x2 cloth quad in the z = 0 plane, seen from above by an 8x8 camera."""
    camera = PinholeCamera(
        position=(0.0, -0.5, 2.0), look_at=(0.0, 0.0, 0.0), up=(0.0, 0.0, 1.0), fov=40.0, width=8, height=8
    )
    light = Light(kind=LightKind.POINT, intensity=(5.0, 5.0, 5.0), position=(0.5, -0.5, 2.0))
    quad = Quad((-1.0, -1.0, 0.0), (2.0, 0.0, 0.0), (0.0, 2.0, 0.0), 'cloth')
    return Scene(camera=camera, light=light, objects=[quad], materials={'cloth': cloth_material})


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "unit: mark test as a unit test"
    )
    config.addinivalue_line(
        "markers", "integration: mark test as an integration test"
    )
    config.addinivalue_line(
        "markers", "slow: mark test as slow running"
    )
