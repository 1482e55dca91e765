"""
Direct-illumination renderer.

Each pixel shoots one primary ray; at the hit the footprint, the local
light and view directions and the light's irradiance scale are derived,
a component estimator returns the four-component quad, and the albedos
combine it to RGB. Neural mode decodes once per pixel; Reference mode
runs the Monte Carlo oracle with ``spp`` samples per pixel.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .camera import RayBatch
from .footprint import footprints_from_hits
from .scene import Hit, Scene
from ..business.oracle import DEFAULT_STEP_FRACTION, aggregate_many
from ..business.shading import combine
from ..config.app_config import RenderConfig
from ..domain.enums import KernelShape
from ..domain.exceptions import MissingLatentError
from ..domain.interfaces import ComponentEstimator, MapProvider
from ..domain.models import FabricParams, Footprint, MaterialLatent, MaterialSpec
from ..network.model import NeuralFabricModel
from ..utils.logging import get_logger, log_performance, progress

logger = get_logger(__name__)


class NeuralEstimator:
    """One decoder query per shading point from cached latents."""

    def __init__(
        self,
        model: NeuralFabricModel,
        latents: Mapping[str, MaterialLatent],
        params: Mapping[str, FabricParams],
    ):
        self.model = model
        self.latents = latents
        self.params = params

    def validate(self, material_ids: Sequence[str]) -> None:
        missing = sorted(m for m in material_ids if m not in self.latents)
        if missing:
            raise MissingLatentError("Materials have no encoded latent", details=", ".join(missing))

    def estimate(
        self,
        material_id: str,
        footprints: Sequence[Footprint],
        omega_i: np.ndarray,
        omega_o: np.ndarray,
        seed: int,
        indices: Sequence[int],
    ) -> np.ndarray:
        centers = np.array([fp.center for fp in footprints], dtype=np.float32).reshape(-1, 2)
        sizes = np.array([fp.size for fp in footprints], dtype=np.float32)
        return self.model.decode_batch(self.latents[material_id], centers, sizes, omega_i, omega_o)

    def params_for(self, material_id: str) -> FabricParams:
        return self.params[material_id]


class ReferenceEstimator:
    """Monte Carlo oracle with ``spp`` footprint samples per pixel."""

    def __init__(
        self,
        maps: MapProvider,
        specs: Mapping[str, MaterialSpec],
        params: Mapping[str, FabricParams],
        spp: int = 256,
        step_fraction: float = DEFAULT_STEP_FRACTION,
    ):
        self.maps = maps
        self.specs = specs
        self.params = params
        self.spp = spp
        self.step_fraction = step_fraction

    def validate(self, material_ids: Sequence[str]) -> None:
        missing = sorted(m for m in material_ids if m not in self.specs)
        if missing:
            raise MissingLatentError("Materials have no procedural parameters", details=", ".join(missing))

    def estimate(
        self,
        material_id: str,
        footprints: Sequence[Footprint],
        omega_i: np.ndarray,
        omega_o: np.ndarray,
        seed: int,
        indices: Sequence[int],
    ) -> np.ndarray:
        stats = aggregate_many(
            footprints,
            omega_i,
            omega_o,
            self.maps.maps_for(self.specs[material_id]),
            self.params[material_id],
            samples=self.spp,
            seed=seed,
            step_fraction=self.step_fraction,
            query_indices=indices,
        )
        return np.array([s.quad.as_array() for s in stats]).reshape(-1, 4)

    def params_for(self, material_id: str) -> FabricParams:
        return self.params[material_id]


def shading_frame(hit: Hit, view: np.ndarray) -> np.ndarray:
    """
    (N, 3, 3) rows tangent, bitangent, normal with the tangent along dp/du.

    The frame is flipped to the viewer's side so the local view direction
    has z >= 0; a light on the far side then arrives with z < 0.
    """
    n = hit.normal
    t = hit.dpdu - np.sum(hit.dpdu * n, axis=-1, keepdims=True) * n
    length = np.linalg.norm(t, axis=-1, keepdims=True)
    # any perpendicular when dp/du is degenerate
    alt = np.cross(n, np.where(np.abs(n[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]]))
    t = np.where(length > 1e-12, t / np.where(length > 0.0, length, 1.0), alt / np.linalg.norm(alt, axis=-1, keepdims=True))
    b = np.cross(n, t)
    flip = np.where(np.sum(view * n, axis=-1) < 0.0, -1.0, 1.0)[:, None]
    return np.stack([t, b * flip, n * flip], axis=1)


def to_local(frame: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum('nij,nj->ni', frame, v)


class Renderer:
    """Renders scenes with a component estimator."""

    def __init__(
        self,
        estimator: ComponentEstimator,
        config: Optional[RenderConfig] = None,
        kernel: KernelShape = KernelShape.BOX,
        threads: int = 1,
        show_progress: bool = False,
    ):
        self.estimator = estimator
        self.config = config or RenderConfig()
        self.kernel = kernel
        self.threads = max(1, int(threads))
        self.show_progress = show_progress

    def _shade(self, scene: Scene, hit: Hit, rays: RayBatch, pixels: np.ndarray, seed: int) -> np.ndarray:
        material_id = scene.objects[int(hit.object_index[0])].material
        material = scene.materials[material_id]
        view = -rays.directions
        frame = shading_frame(hit, view)
        to_light, irradiance = scene.light.incident(hit.position)
        omega_o = to_local(frame, view)
        omega_i = to_local(frame, to_light)

        batch = footprints_from_hits(hit, rays, scene.camera, material.uv_scale, self.kernel)
        quads = self.estimator.estimate(material_id, batch.footprints(), omega_i, omega_o, seed, pixels)

        albedos = self.estimator.params_for(material_id).albedo_array()
        texture = scene.textures.get(material_id)
        if texture is not None:
            tint = texture.mean(hit.uv, batch.sizes / material.uv_scale)
            ones = np.ones_like(tint)
            albedos = albedos[None] * np.stack([tint, tint, ones, ones], axis=1)
        rgb = combine(quads, albedos=albedos)
        return rgb * np.asarray(scene.light.intensity)[None, :] * irradiance[:, None]

    def _render_chunk(self, scene: Scene, pixels: np.ndarray, seed: int) -> np.ndarray:
        camera = scene.camera
        px, py = camera.pixel_coordinates(pixels)
        rays = camera.generate_rays(px, py)
        hit = scene.intersect(rays.origins, rays.directions)
        out = np.tile(np.asarray(scene.background, dtype=np.float64), (pixels.shape[0], 1))
        for index in np.unique(hit.object_index[hit.valid]):
            mask = hit.object_index == index
            out[mask] = self._shade(scene, hit.subset(mask), rays.subset(mask), pixels[mask], seed)
        return out

    @log_performance("render")
    def render(self, scene: Scene, seed: int = 0) -> np.ndarray:
        """
        Linear-light float32 image of shape (H, W, 3).

        Raises:
            MissingLatentError: When a scene material cannot be shaded
        """
        self.estimator.validate(scene.material_ids())
        camera = scene.camera
        count = camera.pixel_count
        chunk = self.config.pixel_chunk
        starts = list(range(0, count, chunk))
        image = np.empty((count, 3), dtype=np.float64)

        def run(start: int) -> None:
            pixels = np.arange(start, min(start + chunk, count), dtype=np.int64)
            image[pixels] = self._render_chunk(scene, pixels, seed)

        if self.threads == 1:
            for start in progress(starts, total=len(starts), desc="render", enabled=self.show_progress):
                run(start)
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                list(pool.map(run, starts))
        logger.info("Rendered image", width=camera.width, height=camera.height, pixels=count)
        return image.reshape(camera.height, camera.width, 3).astype(np.float32)


def estimator_params(scene: Scene, optical_depth: float = 2.0) -> Dict[str, FabricParams]:
    return {mid: material.params(optical_depth) for mid, material in scene.materials.items()}


def estimator_specs(scene: Scene) -> Dict[str, MaterialSpec]:
    return {mid: material.spec for mid, material in scene.materials.items()}
