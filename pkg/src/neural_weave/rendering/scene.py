"""
Scene description: UV-mapped primitives, one light and fabric materials.

Intersection routines are vectorised over rays and return a ``Hit``
with the surface derivatives needed for ray-differential footprints.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .camera import PinholeCamera
from ..domain.enums import LightKind, PrimitiveKind
from ..domain.exceptions import DomainValidationError, SceneFormatError
from ..domain.models import Albedo, FabricParams, MaterialSpec

RAY_EPSILON = 1e-7
Vector = Union[Sequence[float], np.ndarray]


def _vec(value: Vector, name: str) -> np.ndarray:
    array = np.asarray(value, dtype=np.float64).reshape(-1)
    if array.shape != (3,) or not np.all(np.isfinite(array)):
        raise SceneFormatError(f"{name} must be a finite 3-vector", details=str(value))
    return array


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(norm > 0.0, norm, 1.0)


@dataclass
class Hit:
    """Nearest intersections for N rays; ``t`` is inf where a ray misses."""
    t: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    uv: np.ndarray
    dpdu: np.ndarray
    dpdv: np.ndarray
    object_index: np.ndarray

    @classmethod
    def empty(cls, count: int) -> 'Hit':
        return cls(
            t=np.full(count, np.inf),
            position=np.zeros((count, 3)),
            normal=np.zeros((count, 3)),
            uv=np.zeros((count, 2)),
            dpdu=np.zeros((count, 3)),
            dpdv=np.zeros((count, 3)),
            object_index=np.full(count, -1, dtype=np.int64),
        )

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.t)

    def subset(self, mask: np.ndarray) -> 'Hit':
        return Hit(
            self.t[mask], self.position[mask], self.normal[mask], self.uv[mask],
            self.dpdu[mask], self.dpdv[mask], self.object_index[mask],
        )

    def merge(self, other: 'Hit', index: int) -> None:
        """Keep ``other``'s hits where they are nearer, tagging them with ``index``."""
        closer = other.t < self.t
        self.t = np.where(closer, other.t, self.t)
        for name in ('position', 'normal', 'uv', 'dpdu', 'dpdv'):
            current = getattr(self, name)
            current[closer] = getattr(other, name)[closer]
        self.object_index[closer] = index


@dataclass(frozen=True)
class Light:
    kind: LightKind
    intensity: Tuple[float, float, float]
    position: Optional[Tuple[float, float, float]] = None
    direction: Optional[Tuple[float, float, float]] = None

    def __post_init__(self):
        if any(c < 0.0 for c in self.intensity):
            raise SceneFormatError("Light intensity must be non-negative", details=str(self.intensity))
        if self.kind == LightKind.POINT and self.position is None:
            raise SceneFormatError("Point light needs a position")
        if self.kind == LightKind.DIRECTIONAL and self.direction is None:
            raise SceneFormatError("Directional light needs a direction")

    def incident(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Unit directions towards the light and the irradiance scale per point.

        Point lights fall off with 1/d^2; directional lights do not.
        """
        if self.kind == LightKind.POINT:
            to_light = np.asarray(self.position) - points
            dist2 = np.maximum(np.sum(to_light ** 2, axis=-1), RAY_EPSILON)
            return to_light / np.sqrt(dist2)[:, None], 1.0 / dist2
        direction = -_normalize(np.asarray(self.direction, dtype=np.float64))
        return np.broadcast_to(direction, points.shape).copy(), np.ones(points.shape[0])

    def scaled(self, factor: float) -> 'Light':
        return replace(self, intensity=tuple(float(c) * factor for c in self.intensity))


@dataclass(frozen=True)
class SceneMaterial:
    """
    Fabric assigned to scene objects: procedural parameters, albedos and
    the number of weave repeats per UV unit. An optional albedo texture
    over UV space tints the diffuse albedos.
    """
    spec: MaterialSpec
    k_d_warp: Albedo = (1.0, 1.0, 1.0)
    k_d_weft: Albedo = (1.0, 1.0, 1.0)
    k_s_warp: Albedo = (1.0, 1.0, 1.0)
    k_s_weft: Albedo = (1.0, 1.0, 1.0)
    uv_scale: float = 1.0
    albedo_texture: Optional[str] = None

    def __post_init__(self):
        if self.uv_scale <= 0.0:
            raise SceneFormatError("uv_scale must be positive", details=str(self.uv_scale))

    def albedos(self) -> Dict[str, Albedo]:
        return {
            'k_d_warp': tuple(self.k_d_warp),
            'k_d_weft': tuple(self.k_d_weft),
            'k_s_warp': tuple(self.k_s_warp),
            'k_s_weft': tuple(self.k_s_weft),
        }

    def params(self, optical_depth: float = 2.0) -> FabricParams:
        return FabricParams.from_material(self.spec, self.albedos(), optical_depth)


class AlbedoTexture:
    """RGB texture over [0, 1]^2 UV with box-filtered lookups via a summed-area table."""

    def __init__(self, image: np.ndarray):
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 3 or image.shape[2] != 3:
            raise SceneFormatError("Albedo texture must be an (H, W, 3) image")
        self.image = image
        self._table = np.pad(image.cumsum(axis=0).cumsum(axis=1), ((1, 0), (1, 0), (0, 0)))

    def mean(self, uv: np.ndarray, size: np.ndarray) -> np.ndarray:
        """Mean texel colour of the squares of side ``size`` centred at ``uv`` (clamped to the texture)."""
        h, w = self.image.shape[:2]
        half = np.asarray(size)[:, None] / 2.0
        lo = np.clip(uv - half, 0.0, 1.0)
        hi = np.clip(uv + half, 0.0, 1.0)
        x0 = np.floor(lo[:, 0] * w).astype(int)
        y0 = np.floor((1.0 - hi[:, 1]) * h).astype(int)
        x1 = np.maximum(np.ceil(hi[:, 0] * w).astype(int), x0 + 1)
        y1 = np.maximum(np.ceil((1.0 - lo[:, 1]) * h).astype(int), y0 + 1)
        x0, x1 = np.clip(x0, 0, w - 1), np.clip(x1, 1, w)
        y0, y1 = np.clip(y0, 0, h - 1), np.clip(y1, 1, h)
        t = self._table
        total = t[y1, x1] - t[y0, x1] - t[y1, x0] + t[y0, x0]
        area = ((x1 - x0) * (y1 - y0))[:, None]
        return total / area


class Primitive:
    """Base class of UV-mapped scene geometry."""

    kind: PrimitiveKind
    material: str

    def intersect(self, origins: np.ndarray, directions: np.ndarray) -> Hit:
        raise NotImplementedError


@dataclass
class Quad(Primitive):
    """Parallelogram origin + u * edge_u + v * edge_v with (u, v) in [0, 1]^2."""
    origin: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    material: str
    kind: PrimitiveKind = field(default=PrimitiveKind.QUAD, init=False)

    def __post_init__(self):
        self.origin = _vec(self.origin, 'origin')
        self.edge_u = _vec(self.edge_u, 'edge_u')
        self.edge_v = _vec(self.edge_v, 'edge_v')
        normal = np.cross(self.edge_u, self.edge_v)
        if np.linalg.norm(normal) == 0.0:
            raise SceneFormatError("Quad edges must not be parallel")
        self.normal = normal / np.linalg.norm(normal)

    def intersect(self, origins: np.ndarray, directions: np.ndarray) -> Hit:
        count = origins.shape[0]
        hit = Hit.empty(count)
        denom = directions @ self.normal
        safe = np.where(np.abs(denom) > RAY_EPSILON, denom, 1.0)
        t = ((self.origin - origins) @ self.normal) / safe
        points = origins + t[:, None] * directions
        rel = points - self.origin
        # solve rel = u edge_u + v edge_v in the plane
        gram = np.array([[self.edge_u @ self.edge_u, self.edge_u @ self.edge_v],
                         [self.edge_u @ self.edge_v, self.edge_v @ self.edge_v]])
        rhs = np.stack([rel @ self.edge_u, rel @ self.edge_v], axis=-1)
        uv = np.linalg.solve(gram, rhs.T).T
        inside = (
            (np.abs(denom) > RAY_EPSILON) & (t > RAY_EPSILON)
            & (uv[:, 0] >= 0.0) & (uv[:, 0] <= 1.0) & (uv[:, 1] >= 0.0) & (uv[:, 1] <= 1.0)
        )
        hit.t = np.where(inside, t, np.inf)
        hit.position[inside] = points[inside]
        hit.normal[inside] = self.normal
        hit.uv[inside] = uv[inside]
        hit.dpdu[inside] = self.edge_u
        hit.dpdv[inside] = self.edge_v
        return hit


@dataclass
class Sphere(Primitive):
    """Sphere with latitude-longitude UVs: u = phi / 2pi, v = theta / pi."""
    center: np.ndarray
    radius: float
    material: str
    kind: PrimitiveKind = field(default=PrimitiveKind.SPHERE, init=False)

    def __post_init__(self):
        self.center = _vec(self.center, 'center')
        if self.radius <= 0.0:
            raise SceneFormatError("Sphere radius must be positive", details=str(self.radius))

    def intersect(self, origins: np.ndarray, directions: np.ndarray) -> Hit:
        hit = Hit.empty(origins.shape[0])
        oc = origins - self.center
        a = np.sum(directions ** 2, axis=-1)
        b = np.sum(oc * directions, axis=-1)
        c = np.sum(oc ** 2, axis=-1) - self.radius ** 2
        disc = b * b - a * c
        root = np.sqrt(np.maximum(disc, 0.0))
        t0 = (-b - root) / a
        t1 = (-b + root) / a
        t = np.where(t0 > RAY_EPSILON, t0, t1)
        ok = (disc >= 0.0) & (t > RAY_EPSILON)

        p = origins + t[:, None] * directions
        local = (p - self.center) / self.radius
        phi = np.mod(np.arctan2(local[:, 1], local[:, 0]), 2.0 * math.pi)
        theta = np.arccos(np.clip(local[:, 2], -1.0, 1.0))
        sin_t = np.sin(theta)
        dpdu = 2.0 * math.pi * self.radius * np.stack([-local[:, 1], local[:, 0], np.zeros_like(phi)], axis=-1)
        dpdv = math.pi * self.radius * np.stack(
            [np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -sin_t], axis=-1
        )

        hit.t = np.where(ok, t, np.inf)
        hit.position[ok] = p[ok]
        hit.normal[ok] = local[ok]
        hit.uv[ok] = np.stack([phi / (2.0 * math.pi), theta / math.pi], axis=-1)[ok]
        hit.dpdu[ok] = dpdu[ok]
        hit.dpdv[ok] = dpdv[ok]
        return hit


@dataclass
class TriangleMesh(Primitive):
    """Indexed triangles with per-vertex positions, normals and UVs."""
    positions: np.ndarray
    normals: np.ndarray
    uvs: np.ndarray
    faces: np.ndarray
    material: str
    kind: PrimitiveKind = field(default=PrimitiveKind.MESH, init=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.normals = _normalize(np.asarray(self.normals, dtype=np.float64).reshape(-1, 3))
        self.uvs = np.asarray(self.uvs, dtype=np.float64).reshape(-1, 2)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        vertices = self.positions.shape[0]
        if self.normals.shape[0] != vertices or self.uvs.shape[0] != vertices:
            raise SceneFormatError("Mesh needs one normal and one UV per vertex")
        if self.faces.size == 0 or self.faces.min() < 0 or self.faces.max() >= vertices:
            raise SceneFormatError("Mesh faces reference missing vertices")

    def intersect(self, origins: np.ndarray, directions: np.ndarray) -> Hit:
        """Moller-Trumbore against every triangle, keeping the nearest hit."""
        hit = Hit.empty(origins.shape[0])
        for face in self.faces:
            p0, p1, p2 = self.positions[face]
            e1, e2 = p1 - p0, p2 - p0
            pvec = np.cross(directions, e2)
            det = pvec @ e1
            safe = np.where(np.abs(det) > 1e-12, det, 1.0)
            tvec = origins - p0
            b1 = np.sum(tvec * pvec, axis=-1) / safe
            qvec = np.cross(tvec, e1)
            b2 = np.sum(directions * qvec, axis=-1) / safe
            t = (qvec @ e2) / safe
            ok = (np.abs(det) > 1e-12) & (b1 >= 0.0) & (b2 >= 0.0) & (b1 + b2 <= 1.0) & (t > RAY_EPSILON) & (t < hit.t)
            if not ok.any():
                continue
            b0 = 1.0 - b1 - b2
            n0, n1, n2 = self.normals[face]
            uv0, uv1, uv2 = self.uvs[face]
            du1, du2 = uv1 - uv0, uv2 - uv0
            uv_det = du1[0] * du2[1] - du1[1] * du2[0]
            if abs(uv_det) > 1e-12:
                dpdu = (du2[1] * e1 - du1[1] * e2) / uv_det
                dpdv = (-du2[0] * e1 + du1[0] * e2) / uv_det
            else:
                dpdu = dpdv = np.zeros(3)
            hit.t = np.where(ok, t, hit.t)
            hit.position[ok] = origins[ok] + t[ok, None] * directions[ok]
            hit.normal[ok] = _normalize(b0[ok, None] * n0 + b1[ok, None] * n1 + b2[ok, None] * n2)
            hit.uv[ok] = b0[ok, None] * uv0 + b1[ok, None] * uv1 + b2[ok, None] * uv2
            hit.dpdu[ok] = dpdu
            hit.dpdv[ok] = dpdv
        return hit


@dataclass
class Scene:
    camera: PinholeCamera
    light: Light
    objects: List[Primitive]
    materials: Dict[str, SceneMaterial]
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    textures: Dict[str, AlbedoTexture] = field(default_factory=dict)

    def __post_init__(self):
        if not self.objects:
            raise SceneFormatError("Scene has no objects")
        unknown = sorted({obj.material for obj in self.objects} - set(self.materials))
        if unknown:
            raise SceneFormatError("Objects reference undefined materials", details=", ".join(unknown))

    def intersect(self, origins: np.ndarray, directions: np.ndarray) -> Hit:
        hit = Hit.empty(origins.shape[0])
        for index, obj in enumerate(self.objects):
            hit.merge(obj.intersect(origins, directions), index)
        return hit

    def material_ids(self) -> List[str]:
        return sorted({obj.material for obj in self.objects})

    def with_camera(self, camera: PinholeCamera) -> 'Scene':
        return replace(self, camera=camera)

    def with_light(self, light: Light) -> 'Scene':
        return replace(self, light=light)

    def with_material(self, material_id: str, material: SceneMaterial) -> 'Scene':
        if material_id not in self.materials:
            raise DomainValidationError("Unknown scene material", details=material_id)
        materials = dict(self.materials)
        materials[material_id] = material
        return replace(self, materials=materials)
