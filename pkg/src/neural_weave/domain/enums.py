"""
Domain enums for type safety and consistency.

Defines the enumerated types used throughout neural_weave for yarn
identities, weave families, kernels and rendering/editing modes.
"""

from enum import Enum, IntEnum


class YarnId(IntEnum):
    """Yarn family owning a texel. Stored as u8 in geometry blobs."""
    GAP = 0
    WARP = 1
    WEFT = 2


class Interlacing(Enum):
    """Which yarn is on top at a weave-matrix cell."""
    WARP_OVER = "warp_over"
    WEFT_OVER = "weft_over"


class WeaveFamily(Enum):
    """Weave construction rules."""
    PLAIN = "plain"
    TWILL = "twill"
    SATIN = "satin"


class KernelShape(Enum):
    """Footprint filter kernel k_P."""
    BOX = "box"
    GAUSSIAN = "gaussian"


class RenderMode(Enum):
    """Per-pixel shading estimator."""
    NEURAL = "neural"
    REFERENCE = "reference"


class EditPath(Enum):
    """Cache path taken by a material edit."""
    UNCHANGED = "unchanged"
    NO_ENCODE = "no_encode"
    RE_ENCODE = "re_encode"


class LightKind(Enum):
    """Scene light types (direct illumination only)."""
    POINT = "point"
    DIRECTIONAL = "directional"


class PrimitiveKind(Enum):
    """Scene geometry primitives."""
    QUAD = "quad"
    SPHERE = "sphere"
    MESH = "mesh"
