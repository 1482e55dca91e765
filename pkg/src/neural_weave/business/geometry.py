"""
Procedural yarn geometry for one repeat of a weave pattern.

Each yarn segment is a curved cylinder: a cosine lobe across its width,
scaled along the float by an envelope that rises from zero at the float
ends with a centerline tilt of at most u. Lobe edges, float ends and gap
texels all sit at height zero, so the height field is continuous and its
gradient is the one the normals are built from. Heights are kept in
yarn-radius units; the physical height field is ``beta * radius * height``
in repeat units.
"""

import math
from typing import Optional, Tuple

import numpy as np

from .weave import build_weave_matrix, catalog_pattern
from ..domain.enums import YarnId
from ..domain.exceptions import GeometryError
from ..domain.models import GeometryMaps, MaterialSpec, WeaveMatrix
from ..utils.cache import LRUCache
from ..utils.logging import get_logger, log_performance

logger = get_logger(__name__)

GAP_HEIGHT = 0.0
UP = np.array([0.0, 0.0, 1.0])
# smoothstep's steepest slope, reached halfway up the ramp
RAMP_PEAK_SLOPE = 1.5


def resolve_resolution(weave: WeaveMatrix, requested: int) -> int:
    """Round ``requested`` up to the next multiple of both weave dimensions."""
    step = math.lcm(weave.rows, weave.cols)
    return int(math.ceil(requested / step) * step)


def _float_runs(mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cyclic float runs along each line of ``mask``.

    Returns, per cell where the mask holds, the run center and half length
    in cell units. Lines that are over everywhere get an infinite half
    length (a straight yarn with no crossings).
    """
    lines, count = mask.shape
    center = np.zeros(mask.shape)
    half = np.zeros(mask.shape)
    for i in range(lines):
        line = mask[i]
        if line.all():
            half[i, :] = np.inf
            continue
        for j in range(count):
            if not line[j]:
                continue
            start = j
            while line[(start - 1) % count]:
                start -= 1
            end = j
            while line[(end + 1) % count]:
                end += 1
            length = end - start + 1
            center[i, j] = start + length / 2.0
            half[i, j] = length / 2.0
    return center, half


def _smoothstep(x: np.ndarray) -> np.ndarray:
    t = np.clip(x, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _smoothstep_slope(x: np.ndarray) -> np.ndarray:
    t = np.clip(x, 0.0, 1.0)
    return 6.0 * t * (1.0 - t)


def _rotate_about(axis: np.ndarray, normal: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation of tangent vectors ``axis`` about unit ``normal``."""
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    along = np.sum(axis * normal, axis=-1, keepdims=True)
    return axis * cos_a + np.cross(normal, axis) * sin_a + normal * along * (1.0 - cos_a)


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(norm > 0.0, norm, 1.0)


class YarnSurface:
    """
    Continuous yarn surface behind the geometry maps.

    Evaluates the over-yarn at any texture coordinate, so maps and
    finite-difference checks share one definition. Coordinates wrap with
    period one.
    """

    def __init__(
        self,
        weave: WeaveMatrix,
        twist: float,
        inclination: float,
        gap: float,
        beta: float,
        resolution: int,
    ):
        if not 0.0 <= gap < 1.0:
            raise GeometryError("Gap ratio must be in [0, 1)", details=str(gap))
        if beta < 0.0:
            raise GeometryError("Height scale must be non-negative", details=str(beta))
        if not 0.0 <= inclination < 90.0:
            raise GeometryError("Inclination must be in [0, 90) degrees", details=str(inclination))
        if resolution <= 0:
            raise GeometryError("Resolution must be positive", details=str(resolution))

        self.weave = weave
        self.twist = float(twist)
        self.inclination = float(inclination)
        self.gap = float(gap)
        self.beta = float(beta)
        self.resolution = int(resolution)

        self.radius_warp = (1.0 - gap) / (2.0 * weave.cols)
        self.radius_weft = (1.0 - gap) / (2.0 * weave.rows)
        self._tan = math.tan(math.radians(inclination))
        # warp runs along each column (over rows), weft runs along each row
        self._warp_center, self._warp_half = _float_runs(weave.warp_over.T)
        self._weft_center, self._weft_half = _float_runs(~weave.warp_over)

    def _envelope(self, position, center, half, count, cell_len, radius):
        """
        Float envelope in [0, 1] and its derivative along the yarn (per
        repeat unit).

        The envelope is zero at both float ends and rises over a ramp
        sized so the crown centerline tilts by at most the inclination;
        short floats use their whole half length and form one arch.
        """
        finite = np.isfinite(half)
        half_len = np.where(finite & (half > 0.0), half, 1.0) * cell_len
        t = (np.mod(position - center + count / 2.0, count) - count / 2.0) * cell_len
        limit = RAMP_PEAK_SLOPE * radius / self._tan if self._tan > 0.0 else np.inf
        ramp = np.minimum(limit, half_len)
        x = (half_len - np.abs(t)) / ramp
        envelope = np.where(finite, _smoothstep(x), 1.0)
        slope = np.where(finite, -np.sign(t) * _smoothstep_slope(x) / ramp, 0.0)
        return envelope, slope

    def evaluate(self, u, v, beta: Optional[float] = None):
        """
        Evaluate the surface at texture coordinates.

        Returns:
            Tuple of (height in radius units, yarn ids, z_u, z_v) where
            z_u, z_v are physical height-field derivatives including beta
        """
        scale = self.beta if beta is None else float(beta)
        rows, cols = self.weave.rows, self.weave.cols
        uu = np.mod(np.asarray(u, dtype=np.float64), 1.0)
        vv = np.mod(np.asarray(v, dtype=np.float64), 1.0)
        col = np.minimum((uu * cols).astype(np.int64), cols - 1)
        row = np.minimum((vv * rows).astype(np.int64), rows - 1)
        warp = self.weave.warp_over[row, col]

        lateral = np.where(warp, uu * cols - (col + 0.5), vv * rows - (row + 0.5))
        band = (1.0 - self.gap) / 2.0
        is_gap = np.abs(lateral) > band
        s_prime = lateral / (1.0 - self.gap)
        cross_height = np.cos(math.pi * s_prime)
        # d(radius * cos(pi s')) / d(lateral repeat units)
        cross_slope = -(math.pi / 2.0) * np.sin(math.pi * s_prime)

        warp_env, warp_slope = self._envelope(
            vv * rows, self._warp_center[col, row], self._warp_half[col, row], rows, 1.0 / rows, self.radius_warp
        )
        weft_env, weft_slope = self._envelope(
            uu * cols, self._weft_center[row, col], self._weft_half[row, col], cols, 1.0 / cols, self.radius_weft
        )
        envelope = np.where(warp, warp_env, weft_env)
        radius = np.where(warp, self.radius_warp, self.radius_weft)
        height = cross_height * envelope
        lateral_slope = scale * cross_slope * envelope
        along_slope = scale * radius * cross_height * np.where(warp, warp_slope, weft_slope)

        z_u = np.where(warp, lateral_slope, along_slope)
        z_v = np.where(warp, along_slope, lateral_slope)

        yarn = np.where(warp, int(YarnId.WARP), int(YarnId.WEFT))
        yarn = np.where(is_gap, int(YarnId.GAP), yarn).astype(np.uint8)
        height = np.where(is_gap, GAP_HEIGHT, height)
        z_u = np.where(is_gap, 0.0, z_u)
        z_v = np.where(is_gap, 0.0, z_v)
        return height, yarn, z_u, z_v

    def height(self, u, v, beta: Optional[float] = None) -> np.ndarray:
        """Physical height in repeat units."""
        h, yarn, _, _ = self.evaluate(u, v, beta)
        scale = self.beta if beta is None else float(beta)
        radius = np.where(yarn == YarnId.WARP, self.radius_warp, self.radius_weft)
        radius = np.where(yarn == YarnId.GAP, min(self.radius_warp, self.radius_weft), radius)
        return scale * radius * h

    def gradient(self, u, v) -> Tuple[np.ndarray, np.ndarray]:
        _, _, z_u, z_v = self.evaluate(u, v)
        return z_u, z_v

    def frames(self, u, v):
        """Ply normal, orientation, height and yarn id at texture coordinates."""
        height, yarn, z_u, z_v = self.evaluate(u, v)
        ones = np.ones_like(z_u)
        normal = _normalize(np.stack([-z_u, -z_v, ones], axis=-1))

        warp = (yarn == YarnId.WARP)[..., None]
        axis = np.where(
            warp,
            np.stack([np.zeros_like(z_v), ones, z_v], axis=-1),
            np.stack([ones, np.zeros_like(z_u), z_u], axis=-1),
        )
        axis = _normalize(axis - np.sum(axis * normal, axis=-1, keepdims=True) * normal)
        if self.twist != 0.0:
            axis = _rotate_about(axis, normal, math.radians(self.twist))
            axis = _normalize(axis - np.sum(axis * normal, axis=-1, keepdims=True) * normal)

        gap = (yarn == YarnId.GAP)[..., None]
        normal = np.where(gap, UP, normal)
        axis = np.where(gap, 0.0, axis)
        return normal, axis, height, yarn

    def frame_at(self, u: float, v: float):
        """Scalar version of ``frames`` for a single point."""
        normal, axis, height, yarn = self.frames(np.array([u]), np.array([v]))
        return normal[0], axis[0], float(height[0]), YarnId(int(yarn[0]))


@log_performance("synthesize_geometry_maps")
def synthesize_geometry_maps(
    weave: WeaveMatrix,
    twist: float,
    inclination: float,
    gap: float,
    beta: float,
    resolution: int,
) -> GeometryMaps:
    """
    Sample the yarn surface at texel centers of one repeat.

    Raises:
        GeometryError: When ``resolution`` is not a multiple of the weave
            dimensions or a parameter is out of range
    """
    if resolution % weave.rows or resolution % weave.cols:
        raise GeometryError(
            "Resolution must be a multiple of the weave dimensions",
            details=f"{resolution} vs {weave.rows}x{weave.cols}",
        )
    surface = YarnSurface(weave, twist, inclination, gap, beta, resolution)
    centers = (np.arange(resolution) + 0.5) / resolution
    v, u = np.meshgrid(centers, centers, indexing='ij')
    normal, orientation, height, yarn = surface.frames(u, v)
    maps = GeometryMaps(
        normal=normal,
        orientation=orientation,
        height=height,
        yarn_id=yarn,
        beta=beta,
        radius_warp=surface.radius_warp,
        radius_weft=surface.radius_weft,
    )
    logger.debug(
        "Synthesized geometry maps",
        weave=weave.kind.label if weave.kind else f"{weave.rows}x{weave.cols}",
        resolution=resolution,
        gap_fraction=round(maps.gap_fraction, 4),
    )
    return maps


def _area_weights(source: int, target: int) -> np.ndarray:
    """(target, source) matrix averaging source texels into target bins by overlap."""
    edges_src = np.arange(source + 1) / source
    edges_dst = np.arange(target + 1) / target
    lo = np.maximum(edges_dst[:-1, None], edges_src[None, :-1])
    hi = np.minimum(edges_dst[1:, None], edges_src[None, 1:])
    return np.clip(hi - lo, 0.0, None) * target


def downsample_maps(maps: GeometryMaps, resolution: int = 64) -> np.ndarray:
    """
    Area-average normal and orientation into a (6, R, R) float32 array.

    Averaged vectors are renormalized; all-gap bins stay zero orientation.
    """
    if resolution <= 0 or resolution > maps.resolution:
        raise GeometryError(
            "Downsample resolution must be in 1..map resolution",
            details=f"{resolution} vs {maps.resolution}",
        )
    weights = _area_weights(maps.resolution, resolution)
    channels = np.concatenate([maps.normal, maps.orientation], axis=-1)
    pooled = np.einsum('ir,rcn,jc->ijn', weights, channels, weights, optimize=True)
    pooled[..., :3] = _normalize(pooled[..., :3])
    pooled[..., 3:] = _normalize(pooled[..., 3:])
    return np.ascontiguousarray(pooled.transpose(2, 0, 1), dtype=np.float32)


class MapSynthesizer:
    """Hands out cached geometry maps for materials."""

    def __init__(self, resolution: int = 512, cache_size: int = 8):
        self.resolution = resolution
        self._cache = LRUCache(max_size=cache_size)

    def maps_for(self, spec: MaterialSpec) -> GeometryMaps:
        weave = build_weave_matrix(catalog_pattern(spec.pattern))
        resolution = resolve_resolution(weave, self.resolution)
        key = (spec.pattern, spec.twist, spec.inclination, spec.gap, spec.height_scale, resolution)
        return self._cache.get_or_create(
            key,
            lambda: synthesize_geometry_maps(
                weave, spec.twist, spec.inclination, spec.gap, spec.height_scale, resolution
            ),
        )

    def cache_stats(self):
        return self._cache.get_stats()
