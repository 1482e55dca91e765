"""
Training loss: g-mapped specular MSE plus linear diffuse MSE.
"""

from dataclasses import dataclass

import torch

from .encoding import g_map, k_for_light
from ..config.app_config import TrainingConfig
from ..domain.exceptions import InvalidConfigurationError


@dataclass(frozen=True)
class LossConfig:
    lambda_specular: float = 0.4
    lambda_diffuse: float = 0.1
    k_brdf: float = 100.0
    k_btdf: float = 1000.0

    def __post_init__(self):
        for name in ('lambda_specular', 'lambda_diffuse', 'k_brdf', 'k_btdf'):
            if getattr(self, name) <= 0:
                raise InvalidConfigurationError(f"{name} must be positive")

    @classmethod
    def from_training(cls, config: TrainingConfig) -> 'LossConfig':
        return cls(config.lambda_specular, config.lambda_diffuse, config.k_brdf, config.k_btdf)


def fabric_loss(pred: torch.Tensor, target: torch.Tensor, omega_i_z: torch.Tensor, config: LossConfig) -> torch.Tensor:
    """
    lambda_S * sum over yarns of MSE(pred_S, g(gt_S))
    + lambda_C * sum over yarns of MSE(pred_C, gt_C), averaged over the batch.

    Args:
        pred: (B, 4) raw network output
        target: (B, 4) linear oracle targets
        omega_i_z: (B,) light z, selecting k per record
    """
    k = k_for_light(omega_i_z, config.k_brdf, config.k_btdf).unsqueeze(-1)
    specular = torch.mean((pred[:, 2:] - g_map(target[:, 2:], k)) ** 2, dim=0).sum()
    diffuse = torch.mean((pred[:, :2] - target[:, :2]) ** 2, dim=0).sum()
    return config.lambda_specular * specular + config.lambda_diffuse * diffuse
