"""
SGD training loop.

Each iteration picks one material at random, recomputes its latent with
the encoder and drives the decoder with a batch of that material's
queries. The learning rate decays by ``gamma`` after each milestone epoch.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import torch

from .encoding import g_map, k_for_light
from .losses import LossConfig, fabric_loss
from .model import NeuralFabricModel
from ..config.app_config import TrainingConfig
from ..domain.exceptions import DomainValidationError, TrainingDivergedError
from ..domain.models import MaterialSpec
from ..utils.logging import get_logger, progress

logger = get_logger(__name__)

METRIC_COLUMNS = ('epoch', 'iteration', 'loss', 'lr')

CheckpointHook = Callable[[int, NeuralFabricModel], None]


@dataclass
class TrainingMaterial:
    """One material's encoder input and its dataset records as tensors."""
    name: str
    spec: MaterialSpec
    encoder_input: torch.Tensor
    centers: torch.Tensor
    sizes: torch.Tensor
    omega_i: torch.Tensor
    omega_o: torch.Tensor
    target: torch.Tensor

    @classmethod
    def from_arrays(cls, name: str, spec: MaterialSpec, encoder_input: np.ndarray, records: np.ndarray) -> 'TrainingMaterial':
        if records.shape[0] == 0:
            raise DomainValidationError("Material has no training records", details=name)
        return cls(
            name=name,
            spec=spec,
            encoder_input=torch.from_numpy(np.ascontiguousarray(encoder_input, dtype=np.float32)),
            centers=torch.from_numpy(np.ascontiguousarray(records['center'], dtype=np.float32)),
            sizes=torch.from_numpy(np.ascontiguousarray(records['size'], dtype=np.float32)),
            omega_i=torch.from_numpy(np.ascontiguousarray(records['omega_i'], dtype=np.float32)),
            omega_o=torch.from_numpy(np.ascontiguousarray(records['omega_o'], dtype=np.float32)),
            target=torch.from_numpy(np.ascontiguousarray(records['target'], dtype=np.float32)),
        )

    def __len__(self) -> int:
        return int(self.sizes.shape[0])


@dataclass
class TrainingResult:
    metrics: pd.DataFrame
    epochs: int
    iterations: int
    initial_loss: float
    final_loss: float
    checkpoints: List[int] = field(default_factory=list)


def lr_for_epoch(epoch: int, config: TrainingConfig) -> float:
    """Learning rate in effect during 1-based ``epoch``."""
    drops = sum(1 for milestone in config.milestones if epoch > milestone)
    return config.learning_rate * config.gamma ** drops


class Trainer:
    """Single-writer SGD loop over a set of training materials."""

    def __init__(
        self,
        model: NeuralFabricModel,
        config: Optional[TrainingConfig] = None,
        seed: int = 0,
        threads: int = 1,
        show_progress: bool = False,
    ):
        self.model = model
        self.config = config or TrainingConfig()
        self.loss_config = LossConfig.from_training(self.config)
        self.seed = seed
        self.threads = threads
        self.show_progress = show_progress

    def _seed_everything(self) -> np.random.Generator:
        torch.manual_seed(self.seed)
        torch.set_num_threads(self.threads)
        torch.use_deterministic_algorithms(True, warn_only=True)
        return np.random.default_rng(self.seed)

    def iterations_per_epoch(self, materials: List[TrainingMaterial]) -> int:
        total = sum(len(m) for m in materials)
        return max(1, total // self.config.batch_size)

    def step(self, material: TrainingMaterial, index: torch.Tensor) -> torch.Tensor:
        """Loss of one batch; the encoder runs once for the material."""
        z = self.model.encode(
            material.encoder_input.unsqueeze(0),
            torch.tensor([material.spec.roughness], dtype=torch.float32),
            torch.tensor([material.spec.height_scale], dtype=torch.float32),
        )
        omega_i = material.omega_i[index]
        pred = self.model(z, material.centers[index], material.sizes[index], omega_i, material.omega_o[index])
        return fabric_loss(pred, material.target[index], omega_i[:, 2], self.loss_config)

    def train(
        self,
        materials: List[TrainingMaterial],
        checkpoint: Optional[CheckpointHook] = None,
    ) -> TrainingResult:
        """
        Run the configured number of epochs.

        Raises:
            TrainingDivergedError: When a batch loss is not finite
        """
        if not materials:
            raise DomainValidationError("Training needs at least one material")
        rng = self._seed_everything()
        optimizer = torch.optim.SGD(
            self.model.parameters(),
            lr=self.config.learning_rate,
            weight_decay=self.config.weight_decay,
        )
        scheduler = torch.optim.lr_scheduler.MultiStepLR(
            optimizer, milestones=list(self.config.milestones), gamma=self.config.gamma
        )
        per_epoch = self.iterations_per_epoch(materials)
        batch = self.config.batch_size
        rows: List[Dict] = []
        checkpoints: List[int] = []
        iteration = 0

        logger.info(
            "Starting training",
            materials=len(materials),
            epochs=self.config.epochs,
            iterations_per_epoch=per_epoch,
            parameters=self.model.parameter_count(),
        )
        self.model.train()
        for epoch in range(1, self.config.epochs + 1):
            lr = optimizer.param_groups[0]['lr']
            for _ in progress(range(per_epoch), total=per_epoch, desc=f"epoch {epoch}", enabled=self.show_progress):
                m = int(rng.integers(len(materials)))
                material = materials[m]
                count = len(material)
                picks = rng.choice(count, size=batch, replace=count < batch)
                index = torch.from_numpy(picks.astype(np.int64))

                optimizer.zero_grad()
                loss = self.step(material, index)
                value = float(loss.detach())
                if not math.isfinite(value):
                    raise TrainingDivergedError(
                        "Training loss is not finite",
                        details=f"epoch={epoch} iteration={iteration} material={material.name} lr={lr}",
                    )
                loss.backward()
                optimizer.step()
                rows.append({'epoch': epoch, 'iteration': iteration, 'loss': value, 'lr': lr})
                iteration += 1

            scheduler.step()
            epoch_loss = float(np.mean([r['loss'] for r in rows[-per_epoch:]]))
            logger.info("Finished epoch", epoch=epoch, loss=epoch_loss, lr=lr)
            if checkpoint is not None:
                checkpoint(epoch, self.model)
                checkpoints.append(epoch)

        self.model.eval()
        metrics = pd.DataFrame(rows, columns=list(METRIC_COLUMNS))
        return TrainingResult(
            metrics=metrics,
            epochs=self.config.epochs,
            iterations=iteration,
            initial_loss=float(metrics['loss'].iloc[0]),
            final_loss=float(metrics['loss'].iloc[-min(per_epoch, len(metrics)):].mean()),
            checkpoints=checkpoints,
        )

    def evaluate(self, material: TrainingMaterial) -> Dict[str, float]:
        """Loss and mean absolute errors over a material's records: diffuse linear, specular in g-space."""
        self.model.eval()
        with torch.no_grad():
            z = self.model.encoder(
                material.encoder_input.unsqueeze(0),
                torch.tensor([material.spec.roughness]),
                torch.tensor([material.spec.height_scale]),
            )
            pred = self.model(z, material.centers, material.sizes, material.omega_i, material.omega_o)
            loss = fabric_loss(pred, material.target, material.omega_i[:, 2], self.loss_config)
            k = k_for_light(material.omega_i[:, 2], self.loss_config.k_brdf, self.loss_config.k_btdf).unsqueeze(-1)
            specular_target = g_map(material.target[:, 2:], k)
        diffuse_mae = torch.mean(torch.abs(pred[:, :2] - material.target[:, :2]))
        specular_mae = torch.mean(torch.abs(pred[:, 2:] - specular_target))
        return {
            'loss': float(loss),
            'diffuse_mae': float(diffuse_mae),
            'specular_mae': float(specular_mae),
            'records': float(len(material)),
        }
