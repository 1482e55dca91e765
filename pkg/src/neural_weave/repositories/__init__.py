"""File formats: geometry maps, datasets, weights, scenes, images and latents."""

from .dataset_repository import DatasetRepository
from .geometry_repository import GeometryRepository
from .image_repository import ImageRepository
from .latent_repository import LatentRepository
from .scene_repository import SceneRepository
from .weights_repository import WeightsRepository

__all__ = [
    'DatasetRepository',
    'GeometryRepository',
    'ImageRepository',
    'LatentRepository',
    'SceneRepository',
    'WeightsRepository',
]
