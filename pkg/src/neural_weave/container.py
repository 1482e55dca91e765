"""
Dependency injection container for neural_weave.

Creates and wires the repositories, the map synthesizer, the network and
the services in one place, lazily, so commands only pay for what they use
and tests can swap any dependency for a mock.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from .config import AppConfig, load_config
from .domain.exceptions import ConfigurationError, MissingConfigurationError
from .utils.logging import get_logger

logger = get_logger(__name__)


@dataclass
class Container:
    """
    Composition root with lazily created singletons.

    Every dependency lives in ``_instances`` under its property name;
    ``override_dependency`` replaces one before first use.
    """

    config: Optional[AppConfig] = None
    show_progress: bool = False

    _instances: Dict[str, Any] = field(default_factory=dict, init=False)

    def __post_init__(self):
        if self.config is None:
            try:
                self.config = load_config(validate_runtime=False)
            except ConfigurationError as e:
                logger.error("Failed to load configuration, using defaults", error=str(e))
                self.config = AppConfig()

    def _get(self, key: str, factory) -> Any:
        if key not in self._instances:
            self._instances[key] = factory()
        return self._instances[key]

    # Repositories

    @property
    def geometry_repository(self):
        from .repositories.geometry_repository import GeometryRepository
        return self._get('geometry_repository', GeometryRepository)

    @property
    def dataset_repository(self):
        from .repositories.dataset_repository import DatasetRepository
        return self._get('dataset_repository', DatasetRepository)

    @property
    def weights_repository(self):
        from .repositories.weights_repository import WeightsRepository
        return self._get('weights_repository', WeightsRepository)

    @property
    def scene_repository(self):
        from .repositories.scene_repository import SceneRepository
        return self._get('scene_repository', SceneRepository)

    @property
    def image_repository(self):
        from .repositories.image_repository import ImageRepository
        return self._get('image_repository', ImageRepository)

    @property
    def latent_repository(self):
        from .repositories.latent_repository import LatentRepository
        return self._get('latent_repository', LatentRepository)

    # Core components

    @property
    def map_synthesizer(self):
        from .business.geometry import MapSynthesizer

        settings = self.config.pattern_settings
        return self._get('map_synthesizer', lambda: MapSynthesizer(settings.resolution, settings.map_cache_size))

    @property
    def model(self):
        """Network with weights loaded from ``config.weights_path``."""
        return self._get('model', self._create_model)

    def _create_model(self):
        from .network.model import NeuralFabricModel

        model = NeuralFabricModel.from_config(
            self.config.network_settings,
            self.config.training_settings,
            self.config.pattern_settings.encoder_resolution,
        )
        path = Path(self.config.weights_path)
        if not path.exists():
            raise MissingConfigurationError("Weights file not found", details=str(path))
        return self.weights_repository.load_into(model, path)

    # Services

    @property
    def dataset_service(self):
        from .services.dataset_service import DatasetService
        return self._get(
            'dataset_service',
            lambda: DatasetService(self.config, self.dataset_repository, self.map_synthesizer, self.show_progress),
        )

    @property
    def training_service(self):
        from .services.training_service import TrainingService
        return self._get(
            'training_service',
            lambda: TrainingService(
                self.config, self.dataset_repository, self.weights_repository, self.map_synthesizer, self.show_progress
            ),
        )

    @property
    def editing_service(self):
        from .services.editing_service import EditingService
        return self._get('editing_service', lambda: EditingService(self.model, self.map_synthesizer))

    @property
    def render_service(self):
        return self._get('render_service', lambda: self._create_render_service(neural=True))

    @property
    def reference_render_service(self):
        """Render service without a network, for reference-only commands."""
        return self._get('reference_render_service', lambda: self._create_render_service(neural=False))

    def _create_render_service(self, neural: bool):
        from .services.render_service import RenderService

        editing = self.editing_service if neural else None
        return RenderService(self.config, self.map_synthesizer, self.image_repository, editing, self.show_progress)

    # Testing support

    def override_dependency(self, key: str, instance: Any) -> None:
        self._instances[key] = instance

    def reset_dependencies(self) -> None:
        self._instances.clear()

    def get_dependency_status(self) -> Dict[str, bool]:
        keys = [
            'geometry_repository', 'dataset_repository', 'weights_repository', 'scene_repository',
            'image_repository', 'latent_repository', 'map_synthesizer', 'model', 'dataset_service',
            'training_service', 'editing_service', 'render_service', 'reference_render_service',
        ]
        return {key: key in self._instances for key in keys}


_container: Optional[Container] = None


def get_container() -> Container:
    """
    Get the global container instance.

    Raises:
        RuntimeError: If the container has not been set up
    """
    if _container is None:
        raise RuntimeError("Container not initialized. Call setup_container() first.")
    return _container


def setup_container(config: Optional[AppConfig] = None, show_progress: bool = False) -> Container:
    global _container
    _container = Container(config=config, show_progress=show_progress)
    return _container


def reset_container() -> None:
    global _container
    if _container:
        _container.reset_dependencies()
    _container = None
