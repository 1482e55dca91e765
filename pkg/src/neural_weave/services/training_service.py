"""
Training service: loads dataset files, builds encoder inputs for their
materials, runs the trainer and persists weights, checkpoints and the
metrics log.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..business.geometry import MapSynthesizer, downsample_maps
from ..config.app_config import AppConfig
from ..domain.exceptions import DatasetError
from ..network.model import NeuralFabricModel
from ..network.trainer import Trainer, TrainingMaterial, TrainingResult
from ..repositories.dataset_repository import DatasetRepository
from ..repositories.weights_repository import WeightsRepository
from ..utils.logging import CorrelationContext, get_logger

logger = get_logger(__name__)


@dataclass
class TrainingRun:
    result: TrainingResult
    weights_path: Path
    metrics_path: Path
    holdout: Dict[str, Dict[str, float]] = field(default_factory=dict)


class TrainingService:
    """Trains the network on a set of per-material dataset files."""

    def __init__(
        self,
        config: AppConfig,
        dataset_repository: DatasetRepository,
        weights_repository: WeightsRepository,
        maps: MapSynthesizer,
        show_progress: bool = False,
    ):
        self.config = config
        self.dataset_repository = dataset_repository
        self.weights_repository = weights_repository
        self.maps = maps
        self.show_progress = show_progress

    def build_model(self) -> NeuralFabricModel:
        return NeuralFabricModel.from_config(
            self.config.network_settings,
            self.config.training_settings,
            self.config.pattern_settings.encoder_resolution,
        )

    def load_materials(self, paths: Sequence[Path]) -> Tuple[List[TrainingMaterial], List[TrainingMaterial]]:
        """
        Read dataset files into training materials.

        With a holdout fraction, the last records of every file (in a
        seeded shuffle) form the held-out set.
        """
        if not paths:
            raise DatasetError("Training needs at least one dataset file")
        fraction = self.config.training_settings.holdout_fraction
        rng = np.random.default_rng(self.config.seed)
        train, holdout = [], []
        for path in paths:
            header, records = self.dataset_repository.read(path)
            if records.shape[0] == 0:
                logger.warning("Skipping empty dataset", path=str(path))
                continue
            maps = self.maps.maps_for(header.material)
            encoder_input = downsample_maps(maps, self.config.pattern_settings.encoder_resolution)
            name = Path(path).stem
            if fraction > 0.0:
                order = rng.permutation(records.shape[0])
                cut = max(1, int(round(records.shape[0] * (1.0 - fraction))))
                train_rows, held_rows = records[np.sort(order[:cut])], records[np.sort(order[cut:])]
                if held_rows.shape[0]:
                    holdout.append(TrainingMaterial.from_arrays(name, header.material, encoder_input, held_rows))
                records = train_rows
            train.append(TrainingMaterial.from_arrays(name, header.material, encoder_input, records))
        if not train:
            raise DatasetError("All dataset files are empty")
        return train, holdout

    def train(
        self,
        paths: Sequence[Path],
        weights_path: Optional[Path] = None,
        checkpoint_dir: Optional[Path] = None,
        metrics_path: Optional[Path] = None,
    ) -> TrainingRun:
        settings = self.config.training_settings
        weights_path = Path(weights_path or self.config.weights_path)
        checkpoint_dir = Path(checkpoint_dir or settings.checkpoint_dir)
        metrics_path = Path(metrics_path or settings.metrics_file)

        with CorrelationContext() as run_id:
            materials, holdout = self.load_materials(paths)
            model = self.build_model()
            trainer = Trainer(model, settings, self.config.seed, self.config.threads, self.show_progress)

            def checkpoint(epoch: int, current: NeuralFabricModel) -> None:
                self.weights_repository.save(current, checkpoint_dir / f"epoch_{epoch:02d}.wwnn")

            result = trainer.train(materials, checkpoint=checkpoint)
            self.weights_repository.save(model, weights_path)
            metrics_path.parent.mkdir(parents=True, exist_ok=True)
            result.metrics.to_csv(metrics_path, index=False)

            scores = {m.name: trainer.evaluate(m) for m in holdout}
            for name, score in scores.items():
                logger.info("Held-out error", material=name, **score)
            logger.info(
                "Training finished",
                run=run_id,
                initial_loss=result.initial_loss,
                final_loss=result.final_loss,
                weights=str(weights_path),
            )
        return TrainingRun(result, weights_path, metrics_path, scores)
