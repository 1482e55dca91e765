"""
Texture-space footprints from ray differentials.

The auxiliary rays through the neighbouring pixels are intersected with
the tangent plane at the hit; the resulting position offsets are
expressed in (u, v) through dp/du and dp/dv. The isotropic footprint size
is the longer of the two UV derivative vectors, in weave repeats.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .camera import PinholeCamera, RayBatch
from .scene import Hit
from ..domain.enums import KernelShape
from ..domain.models import Footprint
from ..utils.logging import get_logger

logger = get_logger(__name__)

_EPS = 1e-12
# lower bound on the view cosine used by the distance heuristic
_MIN_FALLBACK_COS = 0.05


@dataclass
class FootprintBatch:
    """Wrapped centres (N, 2) and sizes (N,) in weave repeats; ``fallback`` flags heuristic sizes."""
    centers: np.ndarray
    sizes: np.ndarray
    fallback: np.ndarray
    kernel: KernelShape = KernelShape.BOX

    def __len__(self) -> int:
        return int(self.sizes.shape[0])

    def footprints(self) -> List[Footprint]:
        return [
            Footprint((float(c[0]), float(c[1])), float(s), self.kernel)
            for c, s in zip(self.centers, self.sizes)
        ]


def _offset_in_plane(hit: Hit, origins: np.ndarray, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    denom = np.sum(directions * hit.normal, axis=-1)
    ok = np.abs(denom) > _EPS
    t = np.sum((hit.position - origins) * hit.normal, axis=-1) / np.where(ok, denom, 1.0)
    ok &= t > 0.0
    return origins + t[:, None] * directions - hit.position, ok


def _to_uv(dp: np.ndarray, dpdu: np.ndarray, dpdv: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Least-squares (du, dv) with dp ~ du dpdu + dv dpdv."""
    a = np.sum(dpdu * dpdu, axis=-1)
    b = np.sum(dpdu * dpdv, axis=-1)
    c = np.sum(dpdv * dpdv, axis=-1)
    det = a * c - b * b
    ok = np.abs(det) > _EPS
    safe = np.where(ok, det, 1.0)
    ru = np.sum(dp * dpdu, axis=-1)
    rv = np.sum(dp * dpdv, axis=-1)
    du = (c * ru - b * rv) / safe
    dv = (a * rv - b * ru) / safe
    return np.stack([du, dv], axis=-1), ok


def uv_derivatives(hit: Hit, rays: RayBatch) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(duv/dx, duv/dy, ok) for every hit."""
    dpx, ok_x = _offset_in_plane(hit, rays.origins, rays.dx_directions)
    dpy, ok_y = _offset_in_plane(hit, rays.origins, rays.dy_directions)
    duv_dx, ok_u = _to_uv(dpx, hit.dpdu, hit.dpdv)
    duv_dy, _ = _to_uv(dpy, hit.dpdu, hit.dpdv)
    return duv_dx, duv_dy, ok_x & ok_y & ok_u


def footprints_from_hits(
    hit: Hit,
    rays: RayBatch,
    camera: PinholeCamera,
    uv_scale: float = 1.0,
    kernel: KernelShape = KernelShape.BOX,
) -> FootprintBatch:
    """
    Footprints for a batch of valid hits.

    Where derivatives are unavailable the size falls back to the pixel
    spread at the hit distance divided by the view cosine and the mean
    surface stretch; those entries are flagged.
    """
    duv_dx, duv_dy, ok = uv_derivatives(hit, rays)
    sizes = np.maximum(np.linalg.norm(duv_dx, axis=-1), np.linalg.norm(duv_dy, axis=-1)) * uv_scale

    fallback = ~ok | ~np.isfinite(sizes)
    if fallback.any():
        cos = np.abs(np.sum(rays.directions * hit.normal, axis=-1))
        stretch = 0.5 * (np.linalg.norm(hit.dpdu, axis=-1) + np.linalg.norm(hit.dpdv, axis=-1))
        spread = hit.t * camera.pixel_angle / np.maximum(cos, _MIN_FALLBACK_COS)
        heuristic = spread / np.maximum(stretch, _EPS) * uv_scale
        sizes = np.where(fallback, heuristic, sizes)
        logger.debug("Footprint fallback used", count=int(fallback.sum()))

    centers = np.mod(hit.uv * uv_scale, 1.0)
    return FootprintBatch(centers, sizes, fallback, kernel)


def footprint_from_hit(
    hit: Hit,
    camera: PinholeCamera,
    pixel: Tuple[int, int],
    uv_scale: float = 1.0,
    kernel: KernelShape = KernelShape.BOX,
) -> Footprint:
    """Footprint of a single pixel given its (single-entry) hit."""
    rays = camera.generate_rays([pixel[0]], [pixel[1]])
    batch = footprints_from_hits(hit, rays, camera, uv_scale, kernel)
    if batch.fallback[0]:
        logger.warning("Footprint derived from distance heuristic", pixel=list(pixel))
    return batch.footprints()[0]
