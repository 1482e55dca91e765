"""Configuration layer: validated dataclasses and the precedence-aware loader."""

from .app_config import (
    AppConfig,
    DatasetConfig,
    LoggingConfig,
    NetworkConfig,
    OracleConfig,
    PatternConfig,
    RenderConfig,
    ShadingConfig,
    TrainingConfig,
)
from .config_loader import ConfigurationLoader, get_config_loader, load_config, reload_config

__all__ = [
    'AppConfig',
    'DatasetConfig',
    'LoggingConfig',
    'NetworkConfig',
    'OracleConfig',
    'PatternConfig',
    'RenderConfig',
    'ShadingConfig',
    'TrainingConfig',
    'ConfigurationLoader',
    'get_config_loader',
    'load_config',
    'reload_config',
]
