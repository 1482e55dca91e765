"""
Render orchestration: estimator selection, zoom sweeps and image comparison.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .editing_service import EditingService
from ..business.geometry import MapSynthesizer
from ..config.app_config import AppConfig
from ..domain.enums import RenderMode
from ..domain.exceptions import RenderError
from ..rendering.metrics import adjacent_frame_mse, error_heat_map, image_mse
from ..rendering.renderer import NeuralEstimator, ReferenceEstimator, Renderer, estimator_params, estimator_specs
from ..rendering.scene import Scene
from ..repositories.image_repository import ImageRepository
from ..utils.logging import get_logger

logger = get_logger(__name__)


@dataclass
class ZoomSweep:
    distances: List[float]
    frames: List[np.ndarray]
    adjacent_mse: List[float]

    @property
    def mean_adjacent_mse(self) -> float:
        return float(np.mean(self.adjacent_mse)) if self.adjacent_mse else 0.0


@dataclass
class Comparison:
    mse: float
    heat_map: np.ndarray


class RenderService:
    """Renders scenes in neural or reference mode."""

    def __init__(
        self,
        config: AppConfig,
        maps: MapSynthesizer,
        image_repository: ImageRepository,
        editing: Optional[EditingService] = None,
        show_progress: bool = False,
    ):
        self.config = config
        self.maps = maps
        self.image_repository = image_repository
        self.editing = editing
        self.show_progress = show_progress

    def _renderer(self, scene: Scene, mode: RenderMode, spp: Optional[int]) -> Renderer:
        optical_depth = self.config.shading_settings.optical_depth
        kernel = self.config.oracle_settings.kernel_shape
        if mode == RenderMode.NEURAL:
            if self.editing is None:
                raise RenderError("Neural rendering needs a trained model")
            cache = self.editing.cache
            params = {mid: scene.materials[mid].params(optical_depth) for mid in scene.materials if mid in cache}
            estimator = NeuralEstimator(self.editing.encoder, cache.latents(), params)
        else:
            estimator = ReferenceEstimator(
                self.maps,
                estimator_specs(scene),
                estimator_params(scene, optical_depth),
                spp=spp or self.config.render_settings.spp,
                step_fraction=self.config.oracle_settings.march_step_texels,
            )
        return Renderer(estimator, self.config.render_settings, kernel, self.config.threads, self.show_progress)

    def render(
        self,
        scene: Scene,
        mode: RenderMode = RenderMode.NEURAL,
        spp: Optional[int] = None,
        seed: Optional[int] = None,
        resolution: Optional[Tuple[int, int]] = None,
    ) -> np.ndarray:
        """
        Linear-light image of the scene.

        Neural mode encodes any scene material missing from the latent
        cache before rendering.
        """
        if resolution is not None:
            scene = scene.with_camera(scene.camera.with_resolution(*resolution))
        if mode == RenderMode.NEURAL and self.editing is not None:
            self.editing.encode_scene(scene)
        seed = self.config.seed if seed is None else seed
        return self._renderer(scene, mode, spp).render(scene, seed)

    def zoom_sweep(
        self,
        scene: Scene,
        distances: Sequence[float],
        mode: RenderMode = RenderMode.NEURAL,
        spp: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> ZoomSweep:
        """Render the scene from each camera distance and measure adjacent-frame MSE."""
        if len(distances) < 2:
            raise RenderError("A zoom sweep needs at least two distances")
        frames = []
        for distance in distances:
            frames.append(self.render(scene.with_camera(scene.camera.with_distance(distance)), mode, spp, seed))
        sweep = ZoomSweep(list(distances), frames, adjacent_frame_mse(frames))
        logger.info("Zoom sweep finished", mode=mode.value, frames=len(frames), mean_mse=sweep.mean_adjacent_mse)
        return sweep

    def compare(self, a: np.ndarray, b: np.ndarray) -> Comparison:
        return Comparison(image_mse(a, b), error_heat_map(a, b))

    def compare_files(self, path_a: Path, path_b: Path, heat_map_path: Optional[Path] = None) -> Comparison:
        result = self.compare(self.image_repository.load_linear(path_a), self.image_repository.load_linear(path_b))
        if heat_map_path is not None:
            self.image_repository.save_rgb8(result.heat_map, heat_map_path)
        return result

    def save(self, image: np.ndarray, stem: Path) -> Path:
        return self.image_repository.save_render(image, stem, self.config.render_settings.gamma)
