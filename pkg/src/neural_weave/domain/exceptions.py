"""
Domain-specific exceptions for the neural_weave system.

Defines a hierarchy of exceptions for the error conditions that can occur
while synthesizing patterns, evaluating the shading model, building
datasets, training the network and rendering.
"""

from typing import Iterable, Optional, Tuple, Union


class NeuralWeaveError(Exception):
    """Base exception for all neural_weave errors."""

    def __init__(self, message: str, details: Optional[str] = None):
        self.message = message
        self.details = details
        super().__init__(self.message)

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} ({self.details})"
        return self.message


class DomainValidationError(NeuralWeaveError):
    """Raised when domain model validation fails."""
    pass


class ParameterRangeError(DomainValidationError):
    """Raised when a material parameter falls outside its sampling range."""
    pass


class ConfigurationError(NeuralWeaveError):
    """Base exception for configuration-related errors."""
    pass


class MissingConfigurationError(ConfigurationError):
    """Raised when required configuration is missing."""
    pass


class InvalidConfigurationError(ConfigurationError):
    """Raised when configuration values are invalid."""
    pass


class PatternError(NeuralWeaveError):
    """Base exception for weave pattern errors."""
    pass


class UnsupportedWeaveError(PatternError):
    """Raised when a weave kind or size cannot be constructed."""
    pass


class GeometryError(NeuralWeaveError):
    """Raised when geometry maps cannot be synthesized or read."""
    pass


class DatasetError(NeuralWeaveError):
    """Base exception for dataset errors."""
    pass


class DatasetFormatError(DatasetError):
    """Raised on a bad magic number, version or header."""
    pass


class DatasetTruncatedError(DatasetError):
    """Raised when a dataset file ends before its declared record count."""
    pass


class DatasetMergeError(DatasetError):
    """Raised when shards with inconsistent headers are merged."""
    pass


class NetworkError(NeuralWeaveError):
    """Base exception for network errors."""
    pass


class ResolutionMismatchError(NetworkError):
    """Raised when encoder input maps have the wrong resolution."""
    pass


class TopologyMismatchError(NetworkError):
    """Raised when stored weights belong to a different topology."""
    pass


class WeightFormatError(NetworkError):
    """Raised when a weight file is malformed."""
    pass


class TrainingDivergedError(NetworkError):
    """Raised when the training loss stops being finite."""
    pass


class RenderError(NeuralWeaveError):
    """Base exception for rendering errors."""
    pass


class SceneFormatError(RenderError):
    """Raised when a scene description cannot be parsed."""
    pass


class MissingLatentError(RenderError):
    """Raised when neural rendering is requested for unencoded materials."""
    pass


class ImageDimensionError(RenderError):
    """Raised when compared images differ in shape."""
    pass


class EditError(NeuralWeaveError):
    """Base exception for material editing errors."""
    pass


class UnknownMaterialError(EditError):
    """Raised when an edit targets a material that is not cached."""
    pass


# Convenience functions for creating common exceptions

def unsupported_weave_error(kind: str, reason: str) -> UnsupportedWeaveError:
    """Create an UnsupportedWeaveError with standard formatting."""
    return UnsupportedWeaveError(f"Cannot build weave {kind}", details=reason)


def format_error(path: str, reason: str, error_type: type = DatasetFormatError) -> NeuralWeaveError:
    """Create a file format error with standard formatting."""
    return error_type(f"Invalid file {path}", details=reason)


def parameter_range_error(
    name: str,
    value: object,
    bounds: Union[Tuple[float, float], Iterable[float]],
) -> ParameterRangeError:
    """Create a ParameterRangeError quoting the allowed range or set."""
    if isinstance(bounds, tuple) and len(bounds) == 2:
        allowed = f"[{bounds[0]}, {bounds[1]}]"
    else:
        allowed = "{" + ", ".join(str(b) for b in bounds) + "}"
    return ParameterRangeError(
        f"Parameter {name}={value} is out of range",
        details=f"allowed {allowed}",
    )
