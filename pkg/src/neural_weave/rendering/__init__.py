"""Scene description, footprints, renderer and image metrics."""

from .camera import PinholeCamera, RayBatch
from .footprint import FootprintBatch, footprint_from_hit, footprints_from_hits
from .metrics import adjacent_frame_mse, error_heat_map, image_mse
from .renderer import NeuralEstimator, ReferenceEstimator, Renderer
from .scene import AlbedoTexture, Hit, Light, Quad, Scene, SceneMaterial, Sphere, TriangleMesh

__all__ = [
    'PinholeCamera',
    'RayBatch',
    'FootprintBatch',
    'footprint_from_hit',
    'footprints_from_hits',
    'adjacent_frame_mse',
    'error_heat_map',
    'image_mse',
    'NeuralEstimator',
    'ReferenceEstimator',
    'Renderer',
    'AlbedoTexture',
    'Hit',
    'Light',
    'Quad',
    'Scene',
    'SceneMaterial',
    'Sphere',
    'TriangleMesh',
]
