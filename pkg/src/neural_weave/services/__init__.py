"""Application services orchestrating business logic and persistence."""

from .dataset_service import DatasetService, compute_targets
from .editing_service import EditingService, LatentCache
from .render_service import RenderService
from .training_service import TrainingService

__all__ = [
    'DatasetService',
    'compute_targets',
    'EditingService',
    'LatentCache',
    'RenderService',
    'TrainingService',
]
