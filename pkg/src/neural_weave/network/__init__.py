"""Encoder/decoder network, loss and training loop."""

from .encoding import encode_footprint, g_inverse, g_map, one_blob_encode
from .losses import LossConfig, fabric_loss
from .model import NeuralFabricModel, interpolate_latents
from .trainer import Trainer, TrainingMaterial, TrainingResult, lr_for_epoch

__all__ = [
    'encode_footprint',
    'g_inverse',
    'g_map',
    'one_blob_encode',
    'LossConfig',
    'fabric_loss',
    'NeuralFabricModel',
    'interpolate_latents',
    'Trainer',
    'TrainingMaterial',
    'TrainingResult',
    'lr_for_epoch',
]
