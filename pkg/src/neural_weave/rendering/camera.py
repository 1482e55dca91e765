"""
Pinhole camera with ray differentials.
"""

import math
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np

from ..domain.exceptions import SceneFormatError


@dataclass
class RayBatch:
    """Primary rays plus the directions through the next pixel in x and y."""
    origins: np.ndarray
    directions: np.ndarray
    dx_directions: np.ndarray
    dy_directions: np.ndarray

    def __len__(self) -> int:
        return int(self.origins.shape[0])

    def subset(self, mask: np.ndarray) -> 'RayBatch':
        return RayBatch(
            self.origins[mask], self.directions[mask], self.dx_directions[mask], self.dy_directions[mask]
        )


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class PinholeCamera:
    """
    Camera at ``position`` looking at ``look_at``; ``fov`` is the vertical
    field of view in degrees. Pixel (x, y) has its centre at (x + 0.5, y + 0.5)
    with y growing downwards.
    """
    position: Tuple[float, float, float]
    look_at: Tuple[float, float, float]
    up: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    fov: float = 40.0
    width: int = 256
    height: int = 256

    def __post_init__(self):
        if not 0.0 < self.fov < 180.0:
            raise SceneFormatError("Camera fov must be in (0, 180) degrees", details=str(self.fov))
        if self.width <= 0 or self.height <= 0:
            raise SceneFormatError("Image dimensions must be positive")
        forward = np.asarray(self.look_at, dtype=np.float64) - np.asarray(self.position, dtype=np.float64)
        if np.linalg.norm(forward) == 0.0:
            raise SceneFormatError("Camera position and target coincide")
        if np.linalg.norm(np.cross(forward, np.asarray(self.up, dtype=np.float64))) == 0.0:
            raise SceneFormatError("Camera up vector is parallel to the view direction")

    @property
    def basis(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        forward = _unit(np.asarray(self.look_at, dtype=np.float64) - np.asarray(self.position, dtype=np.float64))
        right = _unit(np.cross(forward, np.asarray(self.up, dtype=np.float64)))
        up = np.cross(right, forward)
        return forward, right, up

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    @property
    def pixel_angle(self) -> float:
        """Image-plane extent of one pixel at unit distance."""
        return 2.0 * math.tan(math.radians(self.fov) / 2.0) / self.height

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(np.asarray(self.look_at) - np.asarray(self.position)))

    def _directions(self, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
        forward, right, up = self.basis
        half = math.tan(math.radians(self.fov) / 2.0)
        aspect = self.width / self.height
        x = (2.0 * sx / self.width - 1.0) * half * aspect
        y = (1.0 - 2.0 * sy / self.height) * half
        return _unit(forward + x[:, None] * right + y[:, None] * up)

    def generate_rays(self, px: Sequence[int], py: Sequence[int]) -> RayBatch:
        """Rays through pixel centres, with differentials one pixel over in x and y."""
        sx = np.asarray(px, dtype=np.float64) + 0.5
        sy = np.asarray(py, dtype=np.float64) + 0.5
        origins = np.broadcast_to(np.asarray(self.position, dtype=np.float64), (sx.shape[0], 3)).copy()
        return RayBatch(
            origins,
            self._directions(sx, sy),
            self._directions(sx + 1.0, sy),
            self._directions(sx, sy + 1.0),
        )

    def pixel_coordinates(self, indices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Row-major pixel index to (x, y)."""
        indices = np.asarray(indices, dtype=np.int64)
        return indices % self.width, indices // self.width

    def with_distance(self, distance: float) -> 'PinholeCamera':
        """Same view direction and target, moved to ``distance`` from the target."""
        if distance <= 0.0:
            raise SceneFormatError("Camera distance must be positive", details=str(distance))
        forward, _, _ = self.basis
        position = np.asarray(self.look_at, dtype=np.float64) - distance * forward
        return replace(self, position=tuple(float(c) for c in position))

    def with_resolution(self, width: int, height: int) -> 'PinholeCamera':
        return replace(self, width=width, height=height)
