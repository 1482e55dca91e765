"""
Dataset generation service.

For every material: build the structured query set, take the budgeted
subset plus randomized augmentation queries, compute oracle targets in
chunks and merge the chunk shards into one dataset file. Chunks that
already have a readable shard are reused, so an interrupted run resumes
where it stopped.
"""

import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..business.geometry import MapSynthesizer
from ..business.oracle import aggregate_many
from ..business.sampling import QueryBatch, generate_queries, generate_random_queries, material_grid
from ..config.app_config import AppConfig
from ..domain.exceptions import DatasetError, NeuralWeaveError
from ..domain.models import DatasetHeader, FabricParams, GeometryMaps, MaterialSpec
from ..repositories.dataset_repository import DatasetRepository, empty_records
from ..utils.logging import get_logger, log_performance, progress

logger = get_logger(__name__)

SCALE_NOTE = (
    "desk scale: {materials} materials, {budget} queries per material "
    "(full scale uses 465 materials and about 3.2M queries each)"
)

_WORKER_MAPS: Dict[int, MapSynthesizer] = {}


@dataclass(frozen=True)
class TargetJob:
    """Everything a worker process needs to compute one chunk."""
    spec: MaterialSpec
    resolution: int
    batch: QueryBatch
    samples: int
    seed: int
    step_fraction: float
    degenerate_area: float
    cos_clamp: float
    optical_depth: float


def compute_targets(
    queries: QueryBatch,
    maps: GeometryMaps,
    params: FabricParams,
    samples: int = 2048,
    seed: int = 0,
    step_fraction: float = 0.5,
    degenerate_area: float = 1e-6,
    cos_clamp: float = 1e-4,
) -> Tuple[np.ndarray, int]:
    """
    Oracle targets for a batch of queries.

    Returns:
        (records, dropped): structured RECORD_DTYPE rows for the
        non-degenerate queries, and the number of degenerate ones dropped
    """
    stats = aggregate_many(
        queries.footprints(),
        queries.omega_i,
        queries.omega_o,
        maps,
        params,
        samples=samples,
        seed=seed,
        step_fraction=step_fraction,
        degenerate_area=degenerate_area,
        cos_clamp=cos_clamp,
        query_indices=queries.query_index,
    )
    keep = np.array([not s.degenerate for s in stats], dtype=bool)
    records = empty_records(int(keep.sum()))
    records['query_index'] = queries.query_index[keep]
    records['center'] = queries.centers[keep]
    records['size'] = queries.sizes[keep]
    records['omega_i'] = queries.omega_i[keep]
    records['omega_o'] = queries.omega_o[keep]
    if records.shape[0]:
        records['target'] = np.array([s.quad.as_array() for s, k in zip(stats, keep) if k])
    return records, int((~keep).sum())


def run_target_job(job: TargetJob) -> Tuple[np.ndarray, int]:
    """Process-pool entry point; each worker keeps its own map cache."""
    synthesizer = _WORKER_MAPS.setdefault(job.resolution, MapSynthesizer(job.resolution, cache_size=2))
    maps = synthesizer.maps_for(job.spec)
    params = FabricParams.from_material(job.spec, optical_depth=job.optical_depth)
    return compute_targets(
        job.batch, maps, params, job.samples, job.seed, job.step_fraction, job.degenerate_area, job.cos_clamp
    )


@dataclass
class DatasetBuildResult:
    path: Path
    records: int
    dropped: int
    chunks_computed: int
    chunks_reused: int


class DatasetService:
    """Builds per-material training datasets."""

    def __init__(
        self,
        config: AppConfig,
        repository: DatasetRepository,
        maps: MapSynthesizer,
        show_progress: bool = False,
    ):
        self.config = config
        self.repository = repository
        self.maps = maps
        self.show_progress = show_progress

    @staticmethod
    def material_path(output_dir: Path, index: int) -> Path:
        return Path(output_dir) / f"material_{index:03d}.wwds"

    def sample_materials(self, seed: Optional[int] = None, per_pattern: Optional[int] = None) -> List[MaterialSpec]:
        rng = np.random.default_rng(self.config.seed if seed is None else seed)
        return material_grid(
            rng,
            per_pattern or self.config.dataset_settings.materials_per_pattern,
            gap=self.config.pattern_settings.gap,
            w=self.config.shading_settings.default_w,
        )

    def plan_queries(self, material: MaterialSpec, index: int, seed: int) -> Tuple[QueryBatch, int]:
        """Budgeted structured subset plus augmentation queries, and the map resolution."""
        settings = self.config.dataset_settings
        maps = self.maps.maps_for(material)
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        kernel = self.config.oracle_settings.kernel_shape
        structured = generate_queries(material, maps.resolution, rng, kernel)
        augmented = int(round(settings.query_budget * settings.augmentation_fraction))
        batches = [structured.subsample(settings.query_budget - augmented, rng)]
        if augmented:
            batches.append(generate_random_queries(material, augmented, rng, kernel, first_index=len(structured)))
        return QueryBatch.concat(batches), maps.resolution

    def _header(self, material: MaterialSpec, resolution: int, seed: int, material_count: int) -> DatasetHeader:
        return DatasetHeader(
            material=material,
            kernel=self.config.oracle_settings.kernel_shape,
            w=material.w,
            samples=self.config.oracle_settings.samples,
            seed=seed,
            resolution=resolution,
            scale_note=SCALE_NOTE.format(materials=material_count, budget=self.config.dataset_settings.query_budget),
        )

    def _job(self, material: MaterialSpec, batch: QueryBatch, seed: int) -> TargetJob:
        oracle = self.config.oracle_settings
        return TargetJob(
            spec=material,
            resolution=self.config.pattern_settings.resolution,
            batch=batch,
            samples=oracle.samples,
            seed=seed,
            step_fraction=oracle.march_step_texels,
            degenerate_area=oracle.degenerate_area,
            cos_clamp=self.config.shading_settings.cos_clamp,
            optical_depth=self.config.shading_settings.optical_depth,
        )

    def _readable_shard(self, path: Path, header: DatasetHeader) -> bool:
        if not path.exists():
            return False
        try:
            return self.repository.read_header(path) == header
        except NeuralWeaveError as e:
            logger.warning("Discarding unreadable shard", path=str(path), error=str(e))
            return False

    @log_performance("build material dataset")
    def build_material(
        self,
        material: MaterialSpec,
        index: int,
        output_dir: Path,
        seed: int,
        material_count: int = 1,
        resume: bool = True,
    ) -> DatasetBuildResult:
        """Compute, shard and merge one material's dataset."""
        output_dir = Path(output_dir)
        queries, resolution = self.plan_queries(material, index, seed)
        header = self._header(material, resolution, seed, material_count)
        shard_dir = output_dir / f"material_{index:03d}.shards"
        shard_dir.mkdir(parents=True, exist_ok=True)

        chunks = list(queries.chunks(self.config.dataset_settings.chunk_size))
        shard_paths = [shard_dir / f"chunk_{chunk_id:05d}.wwds" for chunk_id, _ in chunks]
        pending = [
            (path, batch) for path, (_, batch) in zip(shard_paths, chunks)
            if not (resume and self._readable_shard(path, header))
        ]
        logger.info(
            "Building material dataset",
            material=index,
            queries=len(queries),
            chunks=len(chunks),
            pending=len(pending),
        )

        jobs = [self._job(material, batch, seed) for _, batch in pending]
        if self.config.threads > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.config.threads) as pool:
                results = pool.map(run_target_job, jobs)
                for (path, _), (records, _dropped) in zip(pending, results):
                    self.repository.write(path, header, records)
        else:
            for (path, _), job in progress(list(zip(pending, jobs)), desc=f"material {index}", enabled=self.show_progress):
                records, _dropped = run_target_job(job)
                self.repository.write(path, header, records)

        path = self.material_path(output_dir, index)
        total = self.repository.merge_shards(shard_paths, path)
        shutil.rmtree(shard_dir)
        dropped = len(queries) - total
        if dropped:
            logger.info("Dropped degenerate queries", material=index, dropped=dropped)
        return DatasetBuildResult(path, total, dropped, len(pending), len(chunks) - len(pending))

    def build(
        self,
        materials: Sequence[MaterialSpec],
        output_dir: Optional[Path] = None,
        seed: Optional[int] = None,
        resume: bool = True,
    ) -> List[DatasetBuildResult]:
        """Build every material's file; indices follow the material order."""
        if not materials:
            raise DatasetError("No materials to build")
        output_dir = Path(output_dir or self.config.dataset_settings.output_dir)
        seed = self.config.seed if seed is None else seed
        results = []
        for index, material in enumerate(materials):
            results.append(self.build_material(material, index, output_dir, seed, len(materials), resume))
        logger.info(
            "Dataset generation finished",
            materials=len(results),
            records=sum(r.records for r in results),
            dropped=sum(r.dropped for r in results),
        )
        return results
