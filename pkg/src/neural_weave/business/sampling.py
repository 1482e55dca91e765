"""
Material and query sampling for dataset generation.

Materials follow the training distribution: pattern and twist from
discrete sets, inclination, roughness and height scale uniform in their
ranges. Queries follow the structured layout (8x8 footprint centers,
10 + 10 sizes per center, stratified direction pairs) and are quantized
to float32 when generated so stored records reproduce their targets.
"""

import math
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from ..domain.enums import KernelShape
from ..domain.exceptions import DomainValidationError
from ..domain.models import (
    DEFAULT_BLEND_WEIGHT,
    DEFAULT_GAP,
    FOOTPRINT_SIZE_RANGES,
    HEIGHT_SCALE_RANGE,
    INCLINATION_RANGE,
    PATTERN_CHOICES,
    ROUGHNESS_RANGE,
    TWIST_CHOICES,
    DirectionPair,
    Footprint,
    MaterialSpec,
)

CENTER_GRID = 8
SIZES_PER_RANGE = 10
DIRECTION_GRID = 8
# keeps reconstructed z away from zero so float32 directions stay above the surface
DISK_MARGIN = 1e-6


def sample_material(
    rng: np.random.Generator,
    gap: float = DEFAULT_GAP,
    w: float = DEFAULT_BLEND_WEIGHT,
) -> MaterialSpec:
    """Draw one material from the training distribution."""
    return MaterialSpec(
        pattern=int(rng.choice(PATTERN_CHOICES)),
        twist=float(rng.choice(TWIST_CHOICES)),
        inclination=float(rng.uniform(*INCLINATION_RANGE)),
        roughness=float(rng.uniform(*ROUGHNESS_RANGE)),
        height_scale=float(rng.uniform(*HEIGHT_SCALE_RANGE)),
        gap=gap,
        w=w,
    )


def material_grid(
    rng: np.random.Generator,
    per_pattern: int = 4,
    gap: float = DEFAULT_GAP,
    w: float = DEFAULT_BLEND_WEIGHT,
) -> List[MaterialSpec]:
    """Desk-scale material set: ``per_pattern`` random materials for each pattern."""
    if per_pattern <= 0:
        raise DomainValidationError("Materials per pattern must be positive")
    materials = []
    for pattern in PATTERN_CHOICES:
        for _ in range(per_pattern):
            materials.append(sample_material(rng, gap, w).with_changes(pattern=pattern))
    return materials


def _disk_strata(rng: np.random.Generator, grid: int = DIRECTION_GRID) -> np.ndarray:
    """
    One jittered (x, y) per grid cell over [-1, 1]^2 whose cell center lies
    inside the unit disk; jitter is redrawn until the point is inside too.
    """
    cell = 2.0 / grid
    centers = -1.0 + (np.arange(grid) + 0.5) * cell
    cy, cx = np.meshgrid(centers, centers, indexing='ij')
    keep = cx ** 2 + cy ** 2 < 1.0
    lows = np.stack([cx[keep], cy[keep]], axis=-1) - cell / 2.0
    points = lows + rng.random(lows.shape) * cell
    outside = np.sum(points ** 2, axis=-1) >= 1.0 - DISK_MARGIN
    while outside.any():
        points[outside] = lows[outside] + rng.random((int(outside.sum()), 2)) * cell
        outside = np.sum(points ** 2, axis=-1) >= 1.0 - DISK_MARGIN
    return points


def _lift(xy: np.ndarray, z_sign: np.ndarray) -> np.ndarray:
    z = np.sqrt(np.maximum(1.0 - np.sum(xy ** 2, axis=-1), 0.0)) * z_sign
    return np.concatenate([xy, z[..., None]], axis=-1)


def _quantize_directions(omega: np.ndarray) -> np.ndarray:
    omega = omega / np.linalg.norm(omega, axis=-1, keepdims=True)
    return omega.astype(np.float32)


@dataclass(frozen=True, eq=False)
class QueryBatch:
    """Flat float32 arrays of queries plus their global indices."""
    query_index: np.ndarray
    centers: np.ndarray
    sizes: np.ndarray
    omega_i: np.ndarray
    omega_o: np.ndarray
    kernel: KernelShape = KernelShape.BOX

    def __len__(self) -> int:
        return int(self.query_index.shape[0])

    def footprint(self, k: int) -> Footprint:
        return Footprint(
            (float(self.centers[k, 0]), float(self.centers[k, 1])), float(self.sizes[k]), self.kernel
        )

    def footprints(self) -> List[Footprint]:
        return [self.footprint(k) for k in range(len(self))]

    def pair(self, k: int) -> DirectionPair:
        return DirectionPair(self.omega_i[k].astype(np.float64), self.omega_o[k].astype(np.float64))

    def slice(self, start: int, stop: int) -> 'QueryBatch':
        return QueryBatch(
            self.query_index[start:stop],
            self.centers[start:stop],
            self.sizes[start:stop],
            self.omega_i[start:stop],
            self.omega_o[start:stop],
            self.kernel,
        )

    def chunks(self, size: int) -> Iterator[Tuple[int, 'QueryBatch']]:
        for start in range(0, len(self), size):
            yield start // size, self.slice(start, start + size)

    @classmethod
    def concat(cls, batches: Sequence['QueryBatch']) -> 'QueryBatch':
        if not batches:
            raise DomainValidationError("Cannot concatenate an empty list of query batches")
        kernels = {b.kernel for b in batches}
        if len(kernels) != 1:
            raise DomainValidationError("Query batches use different kernels")
        return cls(
            np.concatenate([b.query_index for b in batches]),
            np.concatenate([b.centers for b in batches]),
            np.concatenate([b.sizes for b in batches]),
            np.concatenate([b.omega_i for b in batches]),
            np.concatenate([b.omega_o for b in batches]),
            batches[0].kernel,
        )


class QuerySet:
    """
    Structured queries of one material.

    Footprint ``f`` (center-major, 64 x 20) pairs every one of its light
    strata with every one of its view strata, so query ``k`` decodes to
    (footprint, light stratum, view stratum) without materializing the
    full product.
    """

    def __init__(
        self,
        centers: np.ndarray,
        sizes: np.ndarray,
        light_dirs: np.ndarray,
        view_dirs: np.ndarray,
        kernel: KernelShape = KernelShape.BOX,
    ):
        self.centers = centers
        self.sizes = sizes
        self.light_dirs = light_dirs
        self.view_dirs = view_dirs
        self.kernel = kernel

    @property
    def footprint_count(self) -> int:
        return int(self.sizes.size)

    @property
    def pairs_per_footprint(self) -> int:
        return int(self.light_dirs.shape[1] * self.view_dirs.shape[1])

    def __len__(self) -> int:
        return self.footprint_count * self.pairs_per_footprint

    def _decode(self, index: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        per_view = self.view_dirs.shape[1]
        footprint, rest = np.divmod(index, self.pairs_per_footprint)
        light, view = np.divmod(rest, per_view)
        center_idx = footprint // self.sizes.shape[1]
        return footprint, center_idx, light, view

    def take(self, indices: Sequence[int]) -> QueryBatch:
        """Materialize the given query indices."""
        index = np.asarray(indices, dtype=np.int64)
        if index.size and (index.min() < 0 or index.max() >= len(self)):
            raise DomainValidationError("Query index out of range")
        footprint, center_idx, light, view = self._decode(index)
        return QueryBatch(
            query_index=index,
            centers=self.centers[center_idx],
            sizes=self.sizes.reshape(-1)[footprint],
            omega_i=self.light_dirs[footprint, light],
            omega_o=self.view_dirs[footprint, view],
            kernel=self.kernel,
        )

    def __getitem__(self, k: int) -> Tuple[Footprint, DirectionPair]:
        batch = self.take([k])
        return batch.footprint(0), batch.pair(0)

    def subsample(self, budget: int, rng: np.random.Generator) -> QueryBatch:
        """Uniform subset of at most ``budget`` queries, in index order."""
        if budget <= 0:
            raise DomainValidationError("Query budget must be positive")
        if budget >= len(self):
            return self.take(np.arange(len(self)))
        chosen = np.sort(rng.choice(len(self), size=budget, replace=False))
        return self.take(chosen)


def generate_queries(
    material: MaterialSpec,
    resolution: int,
    rng: np.random.Generator,
    kernel: KernelShape = KernelShape.BOX,
) -> QuerySet:
    """
    Structured query set for one material.

    One center per cell of an 8x8 grid; per center, 10 sizes in
    [0, L_t] and 10 in [L_t, 5 L_t] texels (expressed in repeat units);
    per footprint, jittered light and view strata on an 8x8 grid over the
    unit disk, lights on either side of the surface.
    """
    if resolution <= 0:
        raise DomainValidationError("Resolution must be positive", details=str(resolution))
    cell = 1.0 / CENTER_GRID
    gy, gx = np.meshgrid(np.arange(CENTER_GRID), np.arange(CENTER_GRID), indexing='ij')
    lows = np.stack([gx.ravel(), gy.ravel()], axis=-1) * cell
    centers = (lows + rng.random(lows.shape) * cell).astype(np.float32)

    size_blocks = []
    for low, high in FOOTPRINT_SIZE_RANGES:
        texels = rng.uniform(low * resolution, high * resolution, size=(centers.shape[0], SIZES_PER_RANGE))
        size_blocks.append(texels / resolution)
    sizes = np.concatenate(size_blocks, axis=1).astype(np.float32)

    footprints = sizes.size
    lights, views = [], []
    for _ in range(footprints):
        light_xy = _disk_strata(rng)
        sign = np.where(rng.random(light_xy.shape[0]) < 0.5, -1.0, 1.0)
        lights.append(_quantize_directions(_lift(light_xy, sign)))
        views.append(_quantize_directions(_lift(_disk_strata(rng), np.ones(light_xy.shape[0]))))
    return QuerySet(centers, sizes, np.stack(lights), np.stack(views), kernel)


def _uniform_disk(rng: np.random.Generator, count: int) -> np.ndarray:
    radius = np.sqrt(rng.random(count) * (1.0 - DISK_MARGIN))
    angle = rng.random(count) * 2.0 * math.pi
    return np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)


def generate_random_queries(
    material: MaterialSpec,
    count: int,
    rng: np.random.Generator,
    kernel: KernelShape = KernelShape.BOX,
    first_index: int = 0,
) -> QueryBatch:
    """
    Randomized augmentation queries: uniform center, a size range picked
    uniformly and a size uniform within it, directions uniform over the
    projected disk with a random light side.
    """
    if count < 0:
        raise DomainValidationError("Query count cannot be negative")
    centers = rng.random((count, 2)).astype(np.float32)
    ranges = np.asarray(FOOTPRINT_SIZE_RANGES)
    pick = rng.integers(0, len(FOOTPRINT_SIZE_RANGES), size=count)
    sizes = rng.uniform(ranges[pick, 0], ranges[pick, 1]).astype(np.float32)
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    omega_i = _quantize_directions(_lift(_uniform_disk(rng, count), sign))
    omega_o = _quantize_directions(_lift(_uniform_disk(rng, count), np.ones(count)))
    return QueryBatch(
        query_index=np.arange(first_index, first_index + count, dtype=np.int64),
        centers=centers,
        sizes=sizes,
        omega_i=omega_i,
        omega_o=omega_o,
        kernel=kernel,
    )


def subsample(queries: QuerySet, budget: int, rng: np.random.Generator) -> QueryBatch:
    """Budget-limited uniform subset of a structured query set."""
    return queries.subsample(budget, rng)
