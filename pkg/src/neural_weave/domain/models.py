"""
Core domain models with proper type safety.

Defines the data structures shared by the pattern, shading, oracle,
dataset, network and rendering layers. Array-bearing models are frozen
and their arrays are made read-only so they can be shared across worker
processes and threads without copies.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .enums import Interlacing, KernelShape, WeaveFamily, YarnId, EditPath
from .exceptions import DomainValidationError, parameter_range_error


# Material sampling ranges
PATTERN_CHOICES: Tuple[int, ...] = tuple(range(7))
TWIST_CHOICES: Tuple[float, ...] = (-30.0, 0.0, 30.0)
INCLINATION_RANGE: Tuple[float, float] = (15.0, 45.0)
ROUGHNESS_RANGE: Tuple[float, float] = (0.1, 1.0)
HEIGHT_SCALE_RANGE: Tuple[float, float] = (0.0, 2.0)
FOOTPRINT_SIZE_RANGES: Tuple[Tuple[float, float], ...] = ((0.0, 1.0), (1.0, 5.0))
DEFAULT_GAP = 0.2
DEFAULT_BLEND_WEIGHT = 0.5
DEFAULT_OPTICAL_DEPTH = 2.0

Albedo = Tuple[float, float, float]


def _readonly(array: np.ndarray, dtype: Any = None) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_albedo(name: str, value: Albedo) -> Albedo:
    if len(value) != 3:
        raise DomainValidationError(f"{name} must have three channels")
    if any((not math.isfinite(c)) or c < 0.0 or c > 1.0 for c in value):
        raise parameter_range_error(name, value, (0.0, 1.0))
    return tuple(float(c) for c in value)


@dataclass(frozen=True)
class WeaveKind:
    """Named weave construction: Plain, Twill(n) or Satin(n, m)."""
    family: WeaveFamily
    n: int = 2
    m: int = 2

    @classmethod
    def plain(cls) -> 'WeaveKind':
        return cls(WeaveFamily.PLAIN, 2, 2)

    @classmethod
    def twill(cls, n: int) -> 'WeaveKind':
        return cls(WeaveFamily.TWILL, n, n)

    @classmethod
    def satin(cls, n: int, m: Optional[int] = None) -> 'WeaveKind':
        return cls(WeaveFamily.SATIN, n, n if m is None else m)

    @property
    def label(self) -> str:
        if self.family == WeaveFamily.PLAIN:
            return "plain"
        if self.family == WeaveFamily.TWILL:
            return f"twill{self.n}"
        return f"satin{self.n}x{self.m}"

    @classmethod
    def parse(cls, label: str) -> 'WeaveKind':
        """Parse labels such as ``plain``, ``twill3`` or ``satin5x10``."""
        text = label.strip().lower()
        try:
            if text == "plain":
                return cls.plain()
            if text.startswith("twill"):
                return cls.twill(int(text[5:]))
            if text.startswith("satin"):
                sizes = text[5:].split("x")
                n = int(sizes[0])
                m = int(sizes[1]) if len(sizes) > 1 else n
                return cls.satin(n, m)
        except ValueError as e:
            raise DomainValidationError(f"Invalid weave label: {label}", details=str(e))
        raise DomainValidationError(f"Unknown weave label: {label}")


@dataclass(frozen=True, eq=False)
class WeaveMatrix:
    """
    Binary interlacing grid for one repeat.

    ``warp_over[r, c]`` is True where the warp yarn of column ``c`` passes
    over the weft yarn of row ``r``. Lookups wrap, so the matrix tiles.
    """
    warp_over: np.ndarray
    kind: Optional[WeaveKind] = None

    def __post_init__(self):
        grid = np.asarray(self.warp_over, dtype=bool)
        if grid.ndim != 2 or grid.size == 0:
            raise DomainValidationError("Weave matrix must be a non-empty 2D grid")
        for r in range(grid.shape[0]):
            if grid[r].all() or not grid[r].any():
                raise DomainValidationError(
                    "Every weave row needs both a warp-over and a weft-over cell",
                    details=f"row {r}",
                )
        object.__setattr__(self, 'warp_over', _readonly(grid, bool))

    @property
    def rows(self) -> int:
        return int(self.warp_over.shape[0])

    @property
    def cols(self) -> int:
        return int(self.warp_over.shape[1])

    def cell(self, row: int, col: int) -> Interlacing:
        """Interlacing state at a (wrapped) cell."""
        if self.warp_over[row % self.rows, col % self.cols]:
            return Interlacing.WARP_OVER
        return Interlacing.WEFT_OVER

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeaveMatrix):
            return NotImplemented
        return np.array_equal(self.warp_over, other.warp_over)

    def __hash__(self) -> int:
        return hash((self.warp_over.shape, self.warp_over.tobytes()))


@dataclass(frozen=True)
class Texel:
    """Geometry looked up at one texel."""
    normal: np.ndarray
    orientation: np.ndarray
    height: float
    yarn_id: YarnId


@dataclass(frozen=True, eq=False)
class GeometryMaps:
    """
    Per-texel yarn geometry for one repeat of a weave pattern.

    Arrays are indexed ``[row, col]`` with ``row`` along v and ``col``
    along u. ``height`` is the base height in yarn-radius units before the
    height scale; ``beta`` is the scale the normals were synthesized with.
    """
    normal: np.ndarray
    orientation: np.ndarray
    height: np.ndarray
    yarn_id: np.ndarray
    beta: float
    radius_warp: float
    radius_weft: float

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=np.float64)
        if normal.ndim != 3 or normal.shape[0] != normal.shape[1] or normal.shape[2] != 3:
            raise DomainValidationError("Normal map must be (L, L, 3)")
        resolution = normal.shape[0]
        orientation = np.asarray(self.orientation, dtype=np.float64)
        height = np.asarray(self.height, dtype=np.float64)
        yarn_id = np.asarray(self.yarn_id, dtype=np.uint8)
        if orientation.shape != normal.shape:
            raise DomainValidationError("Orientation map must match the normal map")
        if height.shape != (resolution, resolution) or yarn_id.shape != (resolution, resolution):
            raise DomainValidationError("Height and yarn-id maps must be (L, L)")
        if self.beta < 0:
            raise DomainValidationError("Height scale must be non-negative")
        object.__setattr__(self, 'normal', _readonly(normal))
        object.__setattr__(self, 'orientation', _readonly(orientation))
        object.__setattr__(self, 'height', _readonly(height))
        object.__setattr__(self, 'yarn_id', _readonly(yarn_id))

    @property
    def resolution(self) -> int:
        return int(self.normal.shape[0])

    @property
    def gap_fraction(self) -> float:
        return float(np.mean(self.yarn_id == YarnId.GAP))

    @property
    def radius_map(self) -> np.ndarray:
        """Yarn radius (repeat units) per texel; gaps take the smaller radius."""
        gap_radius = min(self.radius_warp, self.radius_weft)
        return np.where(
            self.yarn_id == YarnId.WARP, self.radius_warp,
            np.where(self.yarn_id == YarnId.WEFT, self.radius_weft, gap_radius),
        )

    def surface_height(self, beta: Optional[float] = None) -> np.ndarray:
        """Height field in repeat units scaled by ``beta`` (defaults to the synthesis scale)."""
        scale = self.beta if beta is None else beta
        return scale * self.height * self.radius_map

    def texel_index(self, u: Any, v: Any) -> Tuple[np.ndarray, np.ndarray]:
        """Wrapped (row, col) texel indices for texture coordinates."""
        resolution = self.resolution
        col = np.floor(np.asarray(u, dtype=np.float64) * resolution).astype(np.int64) % resolution
        row = np.floor(np.asarray(v, dtype=np.float64) * resolution).astype(np.int64) % resolution
        return row, col

    def texel(self, u: float, v: float) -> Texel:
        row, col = self.texel_index(u, v)
        row, col = int(row), int(col)
        return Texel(
            normal=self.normal[row, col],
            orientation=self.orientation[row, col],
            height=float(self.height[row, col]),
            yarn_id=YarnId(int(self.yarn_id[row, col])),
        )


@dataclass(frozen=True)
class FabricParams:
    """Per-yarn shading parameters of the fabric model."""
    alpha_warp: float
    alpha_weft: float
    beta_warp: float
    beta_weft: float
    k_d_warp: Albedo = (1.0, 1.0, 1.0)
    k_d_weft: Albedo = (1.0, 1.0, 1.0)
    k_s_warp: Albedo = (1.0, 1.0, 1.0)
    k_s_weft: Albedo = (1.0, 1.0, 1.0)
    w: float = DEFAULT_BLEND_WEIGHT
    optical_depth: float = DEFAULT_OPTICAL_DEPTH

    def __post_init__(self):
        for name in ('alpha_warp', 'alpha_weft'):
            value = getattr(self, name)
            if not (0.0 < value <= 1.0):
                raise parameter_range_error(name, value, (0.0, 1.0))
        for name in ('beta_warp', 'beta_weft'):
            if getattr(self, name) < 0.0:
                raise parameter_range_error(name, getattr(self, name), (0.0, math.inf))
        if not (0.0 <= self.w <= 1.0):
            raise parameter_range_error('w', self.w, (0.0, 1.0))
        if self.optical_depth <= 0.0:
            raise DomainValidationError("Optical depth must be positive")
        for name in ('k_d_warp', 'k_d_weft', 'k_s_warp', 'k_s_weft'):
            object.__setattr__(self, name, _check_albedo(name, getattr(self, name)))

    @classmethod
    def from_material(
        cls,
        spec: 'MaterialSpec',
        albedos: Optional[Dict[str, Albedo]] = None,
        optical_depth: float = DEFAULT_OPTICAL_DEPTH,
    ) -> 'FabricParams':
        """Shared roughness and height scale for both yarn families."""
        return cls(
            alpha_warp=spec.roughness,
            alpha_weft=spec.roughness,
            beta_warp=spec.height_scale,
            beta_weft=spec.height_scale,
            w=spec.w,
            optical_depth=optical_depth,
            **(albedos or {}),
        )

    def with_changes(self, **changes: Any) -> 'FabricParams':
        return replace(self, **changes)

    def albedo_array(self) -> np.ndarray:
        """(4, 3) albedos in quad order C_warp, C_weft, S_warp, S_weft."""
        return np.array([self.k_d_warp, self.k_d_weft, self.k_s_warp, self.k_s_weft], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class DirectionPair:
    """Light and view directions in the local shading frame (n_s = +z)."""
    omega_i: np.ndarray
    omega_o: np.ndarray

    def __post_init__(self):
        wi = np.asarray(self.omega_i, dtype=np.float64).reshape(3)
        wo = np.asarray(self.omega_o, dtype=np.float64).reshape(3)
        for name, vec in (('omega_i', wi), ('omega_o', wo)):
            if not np.all(np.isfinite(vec)) or abs(np.linalg.norm(vec) - 1.0) > 1e-6:
                raise DomainValidationError(f"{name} must be a unit vector", details=str(vec))
        if wo[2] <= 0.0:
            raise DomainValidationError("omega_o must lie above the surface", details=str(wo))
        object.__setattr__(self, 'omega_i', _readonly(wi))
        object.__setattr__(self, 'omega_o', _readonly(wo))

    @property
    def is_btdf(self) -> bool:
        return bool(self.omega_i[2] < 0.0)

    def swapped(self) -> 'DirectionPair':
        return DirectionPair(self.omega_o, self.omega_i)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DirectionPair):
            return NotImplemented
        return np.array_equal(self.omega_i, other.omega_i) and np.array_equal(self.omega_o, other.omega_o)


@dataclass(frozen=True)
class ComponentQuad:
    """The four separated scalars: warp/weft diffuse and warp/weft specular."""
    c_warp: float = 0.0
    c_weft: float = 0.0
    s_warp: float = 0.0
    s_weft: float = 0.0

    def __post_init__(self):
        for name in ('c_warp', 'c_weft', 's_warp', 's_weft'):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0.0:
                raise DomainValidationError(f"Component {name} must be finite and non-negative", details=str(value))
            object.__setattr__(self, name, value)

    @classmethod
    def zero(cls) -> 'ComponentQuad':
        return cls()

    @classmethod
    def from_array(cls, values: Any) -> 'ComponentQuad':
        c_warp, c_weft, s_warp, s_weft = (float(x) for x in np.asarray(values, dtype=np.float64).reshape(4))
        return cls(c_warp, c_weft, s_warp, s_weft)

    def as_array(self) -> np.ndarray:
        return np.array([self.c_warp, self.c_weft, self.s_warp, self.s_weft], dtype=np.float64)

    @property
    def is_zero(self) -> bool:
        return not any(self.as_array())


@dataclass(frozen=True)
class Footprint:
    """Texture-space query patch: wrapped center, isotropic size, kernel."""
    center: Tuple[float, float]
    size: float
    kernel: KernelShape = KernelShape.BOX

    def __post_init__(self):
        if not math.isfinite(self.size) or self.size < 0.0:
            raise DomainValidationError("Footprint size must be finite and non-negative", details=str(self.size))
        wrapped = []
        for value in self.center:
            w = float(value) % 1.0
            wrapped.append(0.0 if w >= 1.0 else w)
        object.__setattr__(self, 'center', (wrapped[0], wrapped[1]))
        object.__setattr__(self, 'size', float(self.size))


@dataclass(frozen=True, eq=False)
class AggregateStats:
    """Result of one Monte Carlo footprint aggregation."""
    quad: ComponentQuad
    n_f: np.ndarray
    area: float
    samples: int
    variance: np.ndarray
    degenerate: bool = False
    integral_area: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'n_f', _readonly(self.n_f, np.float64))
        object.__setattr__(self, 'variance', _readonly(self.variance, np.float64))
        if self.area < 0.0:
            raise DomainValidationError("Projected area cannot be negative")
        if np.any(self.variance < 0.0):
            raise DomainValidationError("Variance cannot be negative")

    @property
    def standard_error(self) -> np.ndarray:
        return np.sqrt(self.variance / max(self.samples, 1))


@dataclass(frozen=True)
class MaterialSpec:
    """Procedural fabric parameters sampled from the training distribution."""
    pattern: int
    twist: float
    inclination: float
    roughness: float
    height_scale: float
    gap: float = DEFAULT_GAP
    w: float = DEFAULT_BLEND_WEIGHT

    def __post_init__(self):
        if self.pattern not in PATTERN_CHOICES:
            raise parameter_range_error('pattern', self.pattern, PATTERN_CHOICES)
        if float(self.twist) not in TWIST_CHOICES:
            raise parameter_range_error('twist', self.twist, TWIST_CHOICES)
        checks = (
            ('inclination', self.inclination, INCLINATION_RANGE),
            ('roughness', self.roughness, ROUGHNESS_RANGE),
            ('height_scale', self.height_scale, HEIGHT_SCALE_RANGE),
        )
        for name, value, (low, high) in checks:
            if not (low <= value <= high):
                raise parameter_range_error(name, value, (low, high))
        if not (0.0 <= self.gap < 1.0):
            raise parameter_range_error('gap', self.gap, (0.0, 1.0))
        if not (0.0 <= self.w <= 1.0):
            raise parameter_range_error('w', self.w, (0.0, 1.0))
        object.__setattr__(self, 'twist', float(self.twist))

    def with_changes(self, **changes: Any) -> 'MaterialSpec':
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'pattern': self.pattern,
            'twist': self.twist,
            'inclination': self.inclination,
            'roughness': self.roughness,
            'height_scale': self.height_scale,
            'gap': self.gap,
            'w': self.w,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MaterialSpec':
        return cls(
            pattern=int(data['pattern']),
            twist=float(data['twist']),
            inclination=float(data['inclination']),
            roughness=float(data['roughness']),
            height_scale=float(data['height_scale']),
            gap=float(data.get('gap', DEFAULT_GAP)),
            w=float(data.get('w', DEFAULT_BLEND_WEIGHT)),
        )


@dataclass(frozen=True, eq=False)
class MaterialLatent:
    """64-float code that determines decoder behaviour for one fabric."""
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float32).reshape(-1)
        if not np.all(np.isfinite(z)):
            raise DomainValidationError("Latent vector must be finite")
        object.__setattr__(self, 'z', _readonly(z, np.float32))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MaterialLatent):
            return NotImplemented
        return np.array_equal(self.z, other.z)

    def distance(self, other: 'MaterialLatent') -> float:
        return float(np.linalg.norm(self.z.astype(np.float64) - other.z.astype(np.float64)))


@dataclass(frozen=True)
class QueryRecord:
    """One training sample: footprint, directions and oracle target."""
    query_index: int
    footprint: Footprint
    pair: DirectionPair
    target: ComponentQuad


@dataclass(frozen=True)
class DatasetHeader:
    """Metadata stored at the top of every dataset file."""
    material: MaterialSpec
    kernel: KernelShape
    w: float
    samples: int
    seed: int
    resolution: int
    scale_note: str = ""
    version: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'version': self.version,
            'material': self.material.to_dict(),
            'kernel': self.kernel.value,
            'w': self.w,
            'samples': self.samples,
            'seed': self.seed,
            'resolution': self.resolution,
            'scale_note': self.scale_note,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DatasetHeader':
        return cls(
            material=MaterialSpec.from_dict(data['material']),
            kernel=KernelShape(data['kernel']),
            w=float(data['w']),
            samples=int(data['samples']),
            seed=int(data['seed']),
            resolution=int(data['resolution']),
            scale_note=str(data.get('scale_note', '')),
            version=int(data.get('version', 1)),
        )


@dataclass(frozen=True)
class EditResult:
    """Outcome of a material edit."""
    material_id: str
    path: EditPath
    changed_fields: Tuple[str, ...] = field(default_factory=tuple)
    latent_changed: bool = False
