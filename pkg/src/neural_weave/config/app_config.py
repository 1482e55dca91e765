"""
Application configuration management with validation and type safety.

Every tunable constant of the pipeline lives in one of the section
dataclasses below. Sections validate themselves in ``__post_init__``;
``AppConfig`` composes them and loads environment overrides through
python-dotenv.
"""

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv

from ..domain.enums import KernelShape
from ..domain.exceptions import ConfigurationError, InvalidConfigurationError
from ..utils.logging import get_logger

logger = get_logger(__name__)

ENV_PREFIX = "NEURAL_WEAVE_"


@dataclass
class ShadingConfig:
    """Point shading model constants."""

    optical_depth: float = 2.0
    cos_clamp: float = 1e-4
    default_w: float = 0.5

    def __post_init__(self):
        if self.optical_depth <= 0:
            raise InvalidConfigurationError("Optical depth must be positive")
        if not (0 < self.cos_clamp < 0.1):
            raise InvalidConfigurationError("Cosine clamp must be in (0, 0.1)")
        if not (0 <= self.default_w <= 1):
            raise InvalidConfigurationError("Blend weight w must be in [0, 1]")


@dataclass
class PatternConfig:
    """Geometry map synthesis settings."""

    gap: float = 0.2
    resolution: int = 512
    encoder_resolution: int = 64
    map_cache_size: int = 8

    def __post_init__(self):
        if not (0 <= self.gap < 1):
            raise InvalidConfigurationError("Gap ratio must be in [0, 1)")
        if self.resolution < 16:
            raise InvalidConfigurationError("Map resolution must be at least 16 texels")
        if self.encoder_resolution <= 0 or self.encoder_resolution > self.resolution:
            raise InvalidConfigurationError("Encoder resolution must be positive and not exceed the map resolution")
        if self.map_cache_size <= 0:
            raise InvalidConfigurationError("Map cache size must be positive")


@dataclass
class OracleConfig:
    """Monte Carlo aggregation settings."""

    kernel: str = KernelShape.BOX.value
    samples: int = 2048
    march_step_texels: float = 0.5
    degenerate_area: float = 1e-6

    def __post_init__(self):
        valid = [k.value for k in KernelShape]
        if self.kernel not in valid:
            raise InvalidConfigurationError(f"Kernel must be one of: {valid}")
        if self.samples < 1:
            raise InvalidConfigurationError("Sample count must be at least 1")
        if not (0 < self.march_step_texels <= 1):
            raise InvalidConfigurationError("March step must be in (0, 1] texels")
        if self.degenerate_area <= 0:
            raise InvalidConfigurationError("Degenerate area threshold must be positive")

    @property
    def kernel_shape(self) -> KernelShape:
        return KernelShape(self.kernel)


@dataclass
class DatasetConfig:
    """Dataset generation settings."""

    query_budget: int = 50_000
    augmentation_fraction: float = 0.1
    chunk_size: int = 2048
    materials_per_pattern: int = 4
    output_dir: str = "data"

    def __post_init__(self):
        if self.query_budget <= 0:
            raise InvalidConfigurationError("Query budget must be positive")
        if not (0 <= self.augmentation_fraction < 1):
            raise InvalidConfigurationError("Augmentation fraction must be in [0, 1)")
        if self.chunk_size <= 0:
            raise InvalidConfigurationError("Chunk size must be positive")
        if self.materials_per_pattern <= 0:
            raise InvalidConfigurationError("Materials per pattern must be positive")


@dataclass
class NetworkConfig:
    """Encoder/decoder topology. Part of the weight-file topology hash."""

    latent_size: int = 64
    fusion_width: int = 128
    angular_width: int = 64
    encoder_widths: Tuple[int, ...] = (16, 32, 64)
    mlp_width: int = 128
    blob_bins: int = 8
    leaky_slope: float = 0.01
    one_blob: bool = True
    spatial_fusion: bool = True

    def __post_init__(self):
        self.encoder_widths = tuple(int(w) for w in self.encoder_widths)
        if len(self.encoder_widths) != 3 or any(w <= 0 for w in self.encoder_widths):
            raise InvalidConfigurationError("Encoder needs three positive stage widths")
        for name in ('latent_size', 'fusion_width', 'angular_width', 'mlp_width', 'blob_bins'):
            if getattr(self, name) <= 0:
                raise InvalidConfigurationError(f"{name} must be positive")
        if not (0 <= self.leaky_slope < 1):
            raise InvalidConfigurationError("Leaky slope must be in [0, 1)")


@dataclass
class TrainingConfig:
    """SGD schedule and loss weights."""

    epochs: int = 10
    batch_size: int = 512
    learning_rate: float = 5e-2
    milestones: Tuple[int, ...] = (6, 9)
    gamma: float = 0.2
    weight_decay: float = 1e-5
    lambda_specular: float = 0.4
    lambda_diffuse: float = 0.1
    k_brdf: float = 100.0
    k_btdf: float = 1000.0
    holdout_fraction: float = 0.0
    checkpoint_dir: str = "checkpoints"
    metrics_file: str = "metrics.csv"

    def __post_init__(self):
        self.milestones = tuple(int(m) for m in self.milestones)
        if self.epochs <= 0 or self.batch_size <= 0:
            raise InvalidConfigurationError("Epochs and batch size must be positive")
        if self.learning_rate <= 0:
            raise InvalidConfigurationError("Learning rate must be positive")
        if list(self.milestones) != sorted(self.milestones) or any(m < 1 for m in self.milestones):
            raise InvalidConfigurationError("Milestones must be increasing 1-based epochs")
        if not (0 < self.gamma <= 1):
            raise InvalidConfigurationError("Decay factor must be in (0, 1]")
        if self.weight_decay < 0:
            raise InvalidConfigurationError("Weight decay cannot be negative")
        for name in ('lambda_specular', 'lambda_diffuse', 'k_brdf', 'k_btdf'):
            if getattr(self, name) <= 0:
                raise InvalidConfigurationError(f"{name} must be positive")
        if not (0 <= self.holdout_fraction < 1):
            raise InvalidConfigurationError("Holdout fraction must be in [0, 1)")


@dataclass
class RenderConfig:
    """Renderer settings."""

    width: int = 256
    height: int = 256
    spp: int = 256
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma: float = 2.2
    pixel_chunk: int = 4096

    def __post_init__(self):
        self.background = tuple(float(c) for c in self.background)
        if self.width <= 0 or self.height <= 0:
            raise InvalidConfigurationError("Image dimensions must be positive")
        if self.spp < 1:
            raise InvalidConfigurationError("Samples per pixel must be at least 1")
        if self.gamma <= 0:
            raise InvalidConfigurationError("Gamma must be positive")
        if len(self.background) != 3:
            raise InvalidConfigurationError("Background must be an RGB triple")
        if self.pixel_chunk <= 0:
            raise InvalidConfigurationError("Pixel chunk must be positive")


@dataclass
class LoggingConfig:
    """Logging configuration with structured logging support."""

    level: str = "INFO"
    format_type: str = "simple"
    log_file: Optional[str] = None
    enable_console: bool = True

    def __post_init__(self):
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        self.level = self.level.upper()
        if self.level not in valid_levels:
            raise InvalidConfigurationError(f"Log level must be one of: {valid_levels}")
        valid_formats = ["structured", "simple"]
        if self.format_type not in valid_formats:
            raise InvalidConfigurationError(f"Log format must be one of: {valid_formats}")


_SECTIONS = {
    'shading_settings': ShadingConfig,
    'pattern_settings': PatternConfig,
    'oracle_settings': OracleConfig,
    'dataset_settings': DatasetConfig,
    'network_settings': NetworkConfig,
    'training_settings': TrainingConfig,
    'render_settings': RenderConfig,
    'logging_settings': LoggingConfig,
}

# environment variable -> (section or None for top level, field, parser)
_ENV_MAP = {
    'THREADS': (None, 'threads', int),
    'SEED': (None, 'seed', int),
    'ENVIRONMENT': (None, 'environment', str),
    'WEIGHTS': (None, 'weights_path', str),
    'OUTPUT_DIR': ('dataset_settings', 'output_dir', str),
    'SAMPLES': ('oracle_settings', 'samples', int),
    'QUERY_BUDGET': ('dataset_settings', 'query_budget', int),
    'RESOLUTION': ('pattern_settings', 'resolution', int),
    'LOG_LEVEL': ('logging_settings', 'level', str),
    'LOG_FORMAT': ('logging_settings', 'format_type', str),
    'LOG_FILE': ('logging_settings', 'log_file', str),
}


def _env_overrides() -> Dict[str, Any]:
    """Nested dict of the NEURAL_WEAVE_* variables that are set."""
    overrides: Dict[str, Any] = {}
    for suffix, (section, name, parser) in _ENV_MAP.items():
        raw = os.getenv(ENV_PREFIX + suffix)
        if raw is None or raw == "":
            continue
        try:
            value = parser(raw)
        except ValueError as e:
            raise InvalidConfigurationError(f"Invalid value for {ENV_PREFIX + suffix}", details=str(e))
        if section is None:
            overrides[name] = value
        else:
            overrides.setdefault(section, {})[name] = value
    return overrides


@dataclass
class AppConfig:
    """Main application configuration container."""

    shading_settings: ShadingConfig = field(default_factory=ShadingConfig)
    pattern_settings: PatternConfig = field(default_factory=PatternConfig)
    oracle_settings: OracleConfig = field(default_factory=OracleConfig)
    dataset_settings: DatasetConfig = field(default_factory=DatasetConfig)
    network_settings: NetworkConfig = field(default_factory=NetworkConfig)
    training_settings: TrainingConfig = field(default_factory=TrainingConfig)
    render_settings: RenderConfig = field(default_factory=RenderConfig)
    logging_settings: LoggingConfig = field(default_factory=LoggingConfig)

    threads: int = 1
    seed: int = 0
    weights_path: str = "weights.wwnn"
    environment: str = "production"  # development, production
    debug_mode: bool = False

    def __post_init__(self):
        valid_environments = ["development", "production"]
        if self.environment not in valid_environments:
            raise InvalidConfigurationError(f"Environment must be one of: {valid_environments}")
        if self.threads <= 0:
            raise InvalidConfigurationError("Thread count must be positive")
        if self.seed < 0:
            raise InvalidConfigurationError("Seed must be non-negative")
        if self.environment == "development":
            self.debug_mode = True

    @classmethod
    def from_env(cls, env_file: Optional[str] = None) -> 'AppConfig':
        """
        Create configuration from defaults plus NEURAL_WEAVE_* environment variables.

        Args:
            env_file: Optional path to .env file

        Returns:
            Fully configured AppConfig instance

        Raises:
            InvalidConfigurationError: When a setting is invalid
        """
        if env_file:
            load_dotenv(env_file)
        else:
            load_dotenv()
        logger.debug("Loading configuration from environment")
        return cls.from_dict(_env_overrides())

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> 'AppConfig':
        """
        Create configuration from a (possibly partial) nested dictionary.

        Raises:
            ConfigurationError: For unknown keys or invalid values
        """
        try:
            kwargs: Dict[str, Any] = {}
            top_level = {f.name for f in fields(cls)}
            for key, value in config_dict.items():
                if key not in top_level:
                    raise ConfigurationError(f"Unknown configuration key: {key}")
                if key in _SECTIONS:
                    kwargs[key] = _SECTIONS[key](**(value or {}))
                else:
                    kwargs[key] = value
            return cls(**kwargs)
        except ConfigurationError:
            raise
        except TypeError as e:
            raise InvalidConfigurationError("Unknown or malformed configuration field", details=str(e))

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to a JSON-serializable dictionary."""
        data = asdict(self)
        for section in _SECTIONS:
            for key, value in data[section].items():
                if isinstance(value, tuple):
                    data[section][key] = list(value)
        return data

    def validate_runtime_requirements(self) -> List[str]:
        """
        Validate runtime requirements and return any issues.

        Returns:
            List of validation problems (empty if all valid)
        """
        issues = []
        cpu_count = os.cpu_count() or 1
        if self.threads > cpu_count:
            issues.append(f"{self.threads} threads requested but only {cpu_count} CPUs available")
        if self.logging_settings.log_file:
            log_dir = Path(self.logging_settings.log_file).parent
            try:
                log_dir.mkdir(parents=True, exist_ok=True)
            except OSError as e:
                issues.append(f"Cannot create log directory {log_dir}: {e}")
        if self.pattern_settings.resolution % 8 != 0:
            issues.append("Map resolution is not a multiple of the 8x8 footprint grid")
        return issues

    def get_summary(self) -> str:
        """Get a human-readable configuration summary."""
        t = self.training_settings
        lines = [
            "neural_weave configuration",
            f"   Environment: {self.environment} (debug={self.debug_mode})",
            f"   Threads: {self.threads}   Seed: {self.seed}",
            "",
            "Pattern / oracle:",
            f"   Resolution: {self.pattern_settings.resolution}  Gap: {self.pattern_settings.gap}",
            f"   Kernel: {self.oracle_settings.kernel}  Samples: {self.oracle_settings.samples}",
            f"   Optical depth: {self.shading_settings.optical_depth}  w: {self.shading_settings.default_w}",
            "",
            "Training:",
            f"   Epochs: {t.epochs}  Batch: {t.batch_size}  LR: {t.learning_rate}",
            f"   Milestones: {list(t.milestones)} x{t.gamma}  Weight decay: {t.weight_decay}",
            "",
            "Logging:",
            f"   Level: {self.logging_settings.level}  Format: {self.logging_settings.format_type}",
            f"   File: {self.logging_settings.log_file or 'Console only'}",
        ]
        return "\n".join(lines)
