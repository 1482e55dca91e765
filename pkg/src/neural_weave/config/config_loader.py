"""
Configuration loader with environment detection and validation.

Loads configuration from a JSON/YAML file, NEURAL_WEAVE_* environment
variables and command-line flag overrides, in that order of increasing
precedence, on top of the dataclass defaults.
"""

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from .app_config import AppConfig, _env_overrides
from ..domain.exceptions import ConfigurationError
from ..utils.logging import get_logger

logger = get_logger(__name__)


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_override(text: str) -> Dict[str, Any]:
    """
    Parse a ``section.field=value`` flag into a nested dict.

    Values are decoded as JSON when possible, so ``training_settings.epochs=2``
    yields an int and ``render_settings.background=[1,1,1]`` a list.
    """
    if '=' not in text:
        raise ConfigurationError(f"Override must look like key=value: {text}")
    key, raw = text.split('=', 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    result: Dict[str, Any] = {}
    cursor = result
    parts = key.strip().split('.')
    for part in parts[:-1]:
        cursor = cursor.setdefault(part, {})
    cursor[parts[-1]] = value
    return result


class ConfigurationLoader:
    """
    Configuration loader with environment detection.

    Handles loading configuration from multiple sources with proper
    precedence and validation, and caches the result.
    """

    def __init__(self):
        self._config_cache: Optional[AppConfig] = None
        self._config_sources: List[str] = []

    @property
    def sources(self) -> List[str]:
        return list(self._config_sources)

    def load_config(
        self,
        config_file: Optional[str] = None,
        env_file: Optional[str] = None,
        overrides: Optional[List[str]] = None,
        environment: Optional[str] = None,
        validate_runtime: bool = True,
    ) -> AppConfig:
        """
        Load configuration from multiple sources with precedence.

        Precedence (highest to lowest):
        1. Flag overrides (``section.field=value``)
        2. Environment variables
        3. Config file (JSON/YAML)
        4. Application defaults

        Args:
            config_file: Path to JSON/YAML config file
            env_file: Path to .env file
            overrides: Flag overrides from the command line
            environment: Override environment detection
            validate_runtime: Whether to validate runtime requirements

        Returns:
            Fully loaded and validated AppConfig

        Raises:
            ConfigurationError: When configuration is invalid or missing
        """
        if self._config_cache:
            logger.debug("Returning cached configuration")
            return self._config_cache

        try:
            logger.debug("Loading application configuration")
            self._config_sources = ["defaults"]
            config_data: Dict[str, Any] = {}

            if config_file:
                config_data = _deep_merge(config_data, self._load_config_file(config_file))
                self._config_sources.append(config_file)

            if env_file:
                load_dotenv(env_file)
            else:
                load_dotenv()
            env_data = _env_overrides()
            if env_data:
                config_data = _deep_merge(config_data, env_data)
                self._config_sources.append("environment")

            for text in overrides or []:
                config_data = _deep_merge(config_data, parse_override(text))
            if overrides:
                self._config_sources.append("flags")

            config_data['environment'] = environment or config_data.get('environment') or self._detect_environment()
            config = AppConfig.from_dict(config_data)
            config = self._apply_environment_overrides(config, config.environment)
            self._validate_configuration(config, validate_runtime)

            self._config_cache = config
            logger.debug("Configuration loaded", sources=self._config_sources)
            return config

        except ConfigurationError:
            raise
        except Exception as e:
            logger.error(f"Failed to load configuration: {e}")
            raise ConfigurationError(f"Configuration loading failed: {e}")

    def reload_config(self, **kwargs) -> AppConfig:
        """Force reload configuration clearing cache."""
        logger.debug("Reloading configuration (clearing cache)")
        self._config_cache = None
        return self.load_config(**kwargs)

    def _detect_environment(self) -> str:
        env = os.getenv('NEURAL_WEAVE_ENVIRONMENT', '').lower()
        if env in ('development', 'production'):
            return env
        if os.getenv('DEBUG', '').lower() == 'true':
            return 'development'
        return 'production'

    def _load_config_file(self, config_file: str) -> Dict[str, Any]:
        """
        Load configuration from JSON or YAML file.

        Raises:
            ConfigurationError: When file cannot be loaded
        """
        config_path = Path(config_file)
        if not config_path.exists():
            raise ConfigurationError(f"Configuration file not found: {config_path}")

        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                if config_path.suffix.lower() == '.json':
                    data = json.load(f)
                elif config_path.suffix.lower() in ('.yml', '.yaml'):
                    try:
                        import yaml
                    except ImportError:
                        raise ConfigurationError("PyYAML is required to load YAML configuration files")
                    data = yaml.safe_load(f)
                else:
                    raise ConfigurationError(f"Unsupported configuration file format: {config_path.suffix}")
        except ConfigurationError:
            raise
        except Exception as e:
            raise ConfigurationError(f"Failed to load configuration file {config_path}: {e}")

        if not isinstance(data, dict):
            raise ConfigurationError(f"Configuration file {config_path} must hold a mapping")
        return data

    def _apply_environment_overrides(self, config: AppConfig, environment: str) -> AppConfig:
        if environment == 'development':
            config.debug_mode = True
            config.logging_settings.level = 'DEBUG'
        return config

    def _validate_configuration(self, config: AppConfig, validate_runtime: bool = True):
        """
        Cross-field validation. Per-field checks live in ``__post_init__``.

        Raises:
            ConfigurationError: When validation fails
        """
        issues = []
        errors = []

        training = config.training_settings
        if training.milestones and training.milestones[-1] >= training.epochs:
            issues.append("Last learning-rate milestone is not before the final epoch")
        if config.pattern_settings.encoder_resolution > config.pattern_settings.resolution:
            errors.append("Encoder resolution exceeds map resolution")
        if config.dataset_settings.chunk_size > config.dataset_settings.query_budget:
            issues.append("Dataset chunk size exceeds the query budget")

        if validate_runtime:
            issues.extend(config.validate_runtime_requirements())

        if errors:
            error_msg = "Configuration validation failed:\n" + "\n".join(f"  - {e}" for e in errors)
            raise ConfigurationError(error_msg)
        if issues:
            logger.warning("Configuration validation warnings:\n" + "\n".join(f"  - {i}" for i in issues))

    def validate_config_file(self, config_file: str) -> List[str]:
        """Validate a configuration file without caching it."""
        try:
            config = AppConfig.from_dict(self._load_config_file(config_file))
            self._validate_configuration(config, validate_runtime=False)
            return []
        except Exception as e:
            return [str(e)]

    def get_config_template(self) -> Dict[str, Any]:
        """Default configuration as a dict, suitable for writing to JSON."""
        return AppConfig().to_dict()


# Global configuration loader instance
_config_loader: Optional[ConfigurationLoader] = None


def get_config_loader() -> ConfigurationLoader:
    global _config_loader
    if _config_loader is None:
        _config_loader = ConfigurationLoader()
    return _config_loader


def load_config(**kwargs) -> AppConfig:
    """Load configuration using the global loader."""
    return get_config_loader().load_config(**kwargs)


def reload_config(**kwargs) -> AppConfig:
    """Reload configuration using the global loader."""
    return get_config_loader().reload_config(**kwargs)
