"""
Monte Carlo ground truth for the footprint-aggregated fabric BSDF.

Points are drawn from the footprint kernel, shaded with the point model,
weighted by the light cosine, light visibility and visible projected area
toward the viewer, and normalized by the patch's projected area computed
from the visible mean micro-normal. Each query owns an RNG stream keyed by
(seed, query index), so chunked, parallel and serial runs agree.
"""

from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.stats import truncnorm

from .shading import MIRROR_Z, eval_components_batch
from ..domain.enums import KernelShape
from ..domain.models import (
    AggregateStats,
    ComponentQuad,
    DirectionPair,
    FabricParams,
    Footprint,
    GeometryMaps,
)
from ..domain.exceptions import DomainValidationError
from ..utils.logging import get_logger

logger = get_logger(__name__)

DEFAULT_SAMPLES = 2048
DEFAULT_STEP_FRACTION = 0.5
DEGENERATE_AREA = 1e-6
GAUSSIAN_TRUNCATION = 2.0
_HEIGHT_EPS = 1e-9


def query_rng(seed: int, query_index: int) -> np.random.Generator:
    """Independent stream for one query."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(query_index)]))


def sample_footprint(footprint: Footprint, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw ``count`` kernel-distributed points (u, v) in the footprint.

    Box draws uniformly over a size x size square; Gaussian uses
    sigma = size / 2 truncated at two sigma. Points are not wrapped.
    """
    center = np.asarray(footprint.center, dtype=np.float64)
    uniform = rng.random((count, 2))
    if footprint.kernel == KernelShape.GAUSSIAN:
        sigma = footprint.size / 2.0
        offsets = sigma * truncnorm.ppf(uniform, -GAUSSIAN_TRUNCATION, GAUSSIAN_TRUNCATION)
    else:
        offsets = (uniform - 0.5) * footprint.size
    return center + offsets


class HeightField:
    """
    Beta-scaled height field of a map with a vectorised shadow ray-marcher.

    Rays advance in horizontal steps of ``step_fraction`` texels, for at
    most one repeat, and stop early once above the highest texel.
    """

    def __init__(self, maps: GeometryMaps, beta: Optional[float] = None, step_fraction: float = DEFAULT_STEP_FRACTION):
        if step_fraction <= 0.0:
            raise DomainValidationError("Ray-march step must be positive", details=str(step_fraction))
        self.maps = maps
        self.beta = maps.beta if beta is None else float(beta)
        self.heights = maps.surface_height(self.beta)
        self.step = step_fraction / maps.resolution
        self._max = float(self.heights.max())
        self._min = float(self.heights.min())

    def height_at(self, points: np.ndarray) -> np.ndarray:
        row, col = self.maps.texel_index(points[..., 0], points[..., 1])
        return self.heights[row, col]

    def visible(self, points: np.ndarray, omega: np.ndarray) -> np.ndarray:
        """
        Binary visibility of ``points`` toward ``omega``.

        A light below the surface is marched on the mirrored field, so the
        underside is treated as a reflection of the top.
        """
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        omega = np.asarray(omega, dtype=np.float64)
        count = points.shape[0]
        if omega[2] == 0.0:
            raise DomainValidationError("Visibility direction must not be horizontal")

        sign = 1.0
        if omega[2] < 0.0:
            sign = -1.0
            omega = omega * MIRROR_Z
        top = self._max if sign > 0 else -self._min

        horizontal = float(np.hypot(omega[0], omega[1]))
        if horizontal < 1e-12 or self.beta == 0.0:
            return np.ones(count, dtype=bool)

        direction = omega[:2] / horizontal
        rise = omega[2] / horizontal
        start = sign * self.height_at(points)

        occluded = np.zeros(count, dtype=bool)
        active = start < top
        max_steps = int(np.ceil(1.0 / self.step))
        for i in range(1, max_steps + 1):
            if not active.any():
                break
            distance = i * self.step
            ray = start + rise * distance
            active &= ray < top
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            sample = points[idx] + direction * distance
            hit = sign * self.height_at(sample) > ray[idx] + _HEIGHT_EPS
            occluded[idx[hit]] = True
            active[idx[hit]] = False
        return ~occluded


def visibility(
    point: Sequence[float],
    omega: np.ndarray,
    maps: GeometryMaps,
    beta: Optional[float] = None,
    step_fraction: float = DEFAULT_STEP_FRACTION,
) -> int:
    """1 if nothing in the height field occludes ``point`` toward ``omega``, else 0."""
    field = HeightField(maps, beta, step_fraction)
    return int(field.visible(np.asarray(point, dtype=np.float64)[None, :], omega)[0])


def _projected_area_terms(normal: np.ndarray, omega_o: np.ndarray) -> np.ndarray:
    cos_o = np.maximum(normal @ omega_o, 0.0)
    cos_s = np.maximum(normal[:, 2], 1e-12)
    return cos_o / cos_s


def projected_area(
    point: Sequence[float],
    omega_o: np.ndarray,
    maps: GeometryMaps,
    beta: Optional[float] = None,
    step_fraction: float = DEFAULT_STEP_FRACTION,
) -> float:
    """Visible projected area of the texel toward the viewer: <wo.n_p>/<n_s.n_p> V."""
    omega_o = np.asarray(omega_o, dtype=np.float64)
    if omega_o[2] <= 0.0:
        raise DomainValidationError("View direction must lie above the surface")
    point = np.asarray(point, dtype=np.float64)[None, :]
    row, col = maps.texel_index(point[:, 0], point[:, 1])
    area = _projected_area_terms(maps.normal[row, col], omega_o)
    return float(area[0] * visibility(point[0], omega_o, maps, beta, step_fraction))


def _edge_on(omega_o: np.ndarray) -> np.ndarray:
    """Unit-z direction perpendicular to ``omega_o``: a facet seen exactly edge-on."""
    horizontal = float(omega_o[0] ** 2 + omega_o[1] ** 2)
    if horizontal < 1e-24:
        return np.array([0.0, 0.0, 1.0])
    lean = -omega_o[2] / horizontal
    return np.array([lean * omega_o[0], lean * omega_o[1], 1.0])


def _visible_mean_normal(normal: np.ndarray, visible: np.ndarray, omega_o: np.ndarray) -> np.ndarray:
    """
    Normalized average of the visible n_p / <n_s.n_p> over the patch.

    Occluded samples keep their share of the footprint but enter edge-on,
    so they project to nothing along ``omega_o``.
    """
    weight = visible.astype(np.float64)[:, None]
    mean = np.mean(weight * normal / np.maximum(normal[:, 2:3], 1e-12), axis=0)
    hidden = 1.0 - float(weight.mean())
    if hidden > 0.0:
        mean = mean + hidden * _edge_on(omega_o)
    return mean / np.linalg.norm(mean)


def _closed_area(n_f: np.ndarray, omega_o: np.ndarray) -> float:
    return max(float(n_f @ omega_o), 0.0) / max(float(n_f[2]), 1e-12)


class AreaEstimate(NamedTuple):
    """Patch projected area by direct integration and from the mean normal."""
    integral: float
    closed: float
    standard_error: float


def _aggregate_on_field(
    footprint: Footprint,
    omega_i: np.ndarray,
    omega_o: np.ndarray,
    field: HeightField,
    params: FabricParams,
    samples: int,
    rng: np.random.Generator,
    degenerate_area: float,
    cos_clamp: float,
) -> AggregateStats:
    maps = field.maps
    points = sample_footprint(footprint, samples, rng)
    row, col = maps.texel_index(points[:, 0], points[:, 1])
    normal = maps.normal[row, col]
    orientation = maps.orientation[row, col]
    yarn = maps.yarn_id[row, col]

    quads = eval_components_batch(normal, orientation, yarn, omega_i, omega_o, params, cos_clamp)
    light = omega_i * MIRROR_Z if omega_i[2] < 0.0 else omega_i
    cos_i = np.maximum(normal @ light, 0.0)
    v_i = field.visible(points, omega_i)
    v_o = field.visible(points, omega_o)
    area = _projected_area_terms(normal, omega_o) * v_o

    n_f = _visible_mean_normal(normal, v_o, omega_o)
    closed = _closed_area(n_f, omega_o)
    integral_area = float(area.mean())
    if closed < degenerate_area:
        return AggregateStats(
            quad=ComponentQuad.zero(),
            n_f=n_f,
            area=closed,
            samples=samples,
            variance=np.zeros(4),
            degenerate=True,
            integral_area=integral_area,
        )

    terms = quads * (cos_i * v_i * area)[:, None] / closed
    variance = terms.var(axis=0, ddof=1) if samples > 1 else np.zeros(4)
    return AggregateStats(
        quad=ComponentQuad.from_array(np.maximum(terms.mean(axis=0), 0.0)),
        n_f=n_f,
        area=closed,
        samples=samples,
        variance=variance,
        degenerate=False,
        integral_area=integral_area,
    )


def aggregate(
    footprint: Footprint,
    pair: DirectionPair,
    maps: GeometryMaps,
    params: FabricParams,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    query_index: int = 0,
    step_fraction: float = DEFAULT_STEP_FRACTION,
    degenerate_area: float = DEGENERATE_AREA,
    cos_clamp: float = 1e-4,
) -> AggregateStats:
    """
    Estimate the aggregated component quad over a footprint.

    The height scale used for visibility is the one the maps were
    synthesized with, so normals and shadows stay consistent.

    Args:
        footprint: Query patch
        pair: Light and view directions in the shading frame
        maps: Geometry maps of the material
        params: Fabric shading parameters
        samples: Number of kernel samples
        seed: Base seed
        query_index: Index selecting the RNG stream

    Returns:
        AggregateStats; a zero quad flagged degenerate when the patch's
        projected area falls below ``degenerate_area``
    """
    if samples < 1:
        raise DomainValidationError("Sample count must be at least 1", details=str(samples))
    field = HeightField(maps, step_fraction=step_fraction)
    return _aggregate_on_field(
        footprint,
        np.asarray(pair.omega_i, dtype=np.float64),
        np.asarray(pair.omega_o, dtype=np.float64),
        field,
        params,
        samples,
        query_rng(seed, query_index),
        degenerate_area,
        cos_clamp,
    )


def aggregate_many(
    footprints: Sequence[Footprint],
    omega_i: np.ndarray,
    omega_o: np.ndarray,
    maps: GeometryMaps,
    params: FabricParams,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    start_index: int = 0,
    step_fraction: float = DEFAULT_STEP_FRACTION,
    degenerate_area: float = DEGENERATE_AREA,
    cos_clamp: float = 1e-4,
    query_indices: Optional[Sequence[int]] = None,
) -> List[AggregateStats]:
    """
    Aggregate a chunk of queries; query ``k`` uses stream ``start_index + k``,
    or ``query_indices[k]`` when given (e.g. pixel indices).

    Results equal calling ``aggregate`` per query with the same indices.
    """
    if samples < 1:
        raise DomainValidationError("Sample count must be at least 1", details=str(samples))
    omega_i = np.asarray(omega_i, dtype=np.float64).reshape(-1, 3)
    omega_o = np.asarray(omega_o, dtype=np.float64).reshape(-1, 3)
    if not (len(footprints) == omega_i.shape[0] == omega_o.shape[0]):
        raise DomainValidationError("Footprints and direction arrays must have equal length")

    if query_indices is None:
        query_indices = range(start_index, start_index + len(footprints))
    elif len(query_indices) != len(footprints):
        raise DomainValidationError("One query index is needed per footprint")

    field = HeightField(maps, step_fraction=step_fraction)
    results = []
    for k, footprint in enumerate(footprints):
        results.append(
            _aggregate_on_field(
                footprint,
                omega_i[k],
                omega_o[k],
                field,
                params,
                samples,
                query_rng(seed, int(query_indices[k])),
                degenerate_area,
                cos_clamp,
            )
        )
    return results


def estimate_A_P_consistency(
    footprint: Footprint,
    omega_o: np.ndarray,
    maps: GeometryMaps,
    params: Optional[FabricParams] = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    query_index: int = 0,
    step_fraction: float = DEFAULT_STEP_FRACTION,
) -> AreaEstimate:
    """
    Projected patch area two ways: the Monte Carlo integral of
    <wo.n_p>/<n_s.n_p> V over the kernel, and <wo.n_f>/<n_s.n_f>.

    ``params`` is accepted for symmetry with ``aggregate``; the areas do
    not depend on shading parameters.
    """
    if samples < 1:
        raise DomainValidationError("Sample count must be at least 1", details=str(samples))
    omega_o = np.asarray(omega_o, dtype=np.float64)
    field = HeightField(maps, step_fraction=step_fraction)
    points = sample_footprint(footprint, samples, query_rng(seed, query_index))
    row, col = maps.texel_index(points[:, 0], points[:, 1])
    normal = maps.normal[row, col]
    visible = field.visible(points, omega_o)
    area = _projected_area_terms(normal, omega_o) * visible
    error = float(area.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return AreaEstimate(
        integral=float(area.mean()),
        closed=_closed_area(_visible_mean_normal(normal, visible, omega_o), omega_o),
        standard_error=error,
    )


def standard_error(stats: AggregateStats) -> np.ndarray:
    """Per-component standard error of an aggregate."""
    return stats.standard_error


def pooled_standard_error(a: AggregateStats, b: AggregateStats) -> np.ndarray:
    """Standard error of the difference of two independent aggregates."""
    return np.sqrt(a.standard_error ** 2 + b.standard_error ** 2)
