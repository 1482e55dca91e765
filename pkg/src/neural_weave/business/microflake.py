"""
Fiber-like microflake distribution and its Smith-style attenuation.

All kernels broadcast over leading array dimensions, so the oracle can
evaluate thousands of texels at once and the scalar operations are thin
wrappers over the same code.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..domain.exceptions import DomainValidationError, parameter_range_error
from ..domain.models import DEFAULT_OPTICAL_DEPTH, DirectionPair

COS_CLAMP = 1e-4
UP = np.array([0.0, 0.0, 1.0])


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def _check_alpha(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha <= 0.0):
        raise parameter_range_error('alpha', alpha.min(), (0.0, 1.0))
    return alpha


def density(h: np.ndarray, axis: np.ndarray, alpha) -> np.ndarray:
    """D(h) = 1 / (pi alpha q^2) with q = 1 + (1/alpha^2 - 1)(h.axis)^2."""
    alpha = _check_alpha(alpha)
    along = _dot(h, axis)
    q = 1.0 + (1.0 / (alpha * alpha) - 1.0) * along * along
    return 1.0 / (math.pi * alpha * q * q)


def projected_sigma(omega: np.ndarray, axis: np.ndarray, alpha) -> np.ndarray:
    """sigma(omega) = sqrt(omega^T S omega) = sqrt(1 + (alpha^2 - 1)(omega.axis)^2)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    along = _dot(omega, axis)
    return np.sqrt(np.maximum(1.0 + (alpha * alpha - 1.0) * along * along, 0.0))


def lambda_term(
    omega: np.ndarray,
    axis: np.ndarray,
    alpha,
    normal: np.ndarray = UP,
    cos_clamp: float = COS_CLAMP,
) -> np.ndarray:
    """Lambda(omega) = sigma(omega) / cos, cosine against ``normal`` clamped to ``cos_clamp``."""
    cos = np.maximum(_dot(omega, normal), cos_clamp)
    return projected_sigma(omega, axis, alpha) / cos


def attenuation(lambda_sum: np.ndarray, optical_depth: float = DEFAULT_OPTICAL_DEPTH) -> np.ndarray:
    """G = (1 - exp(-T L)) / L, tending to T as L goes to zero."""
    total = np.asarray(lambda_sum, dtype=np.float64)
    safe = np.where(total > 1e-12, total, 1.0)
    return np.where(total > 1e-12, -np.expm1(-optical_depth * safe) / safe, optical_depth)


def specular_kernel(
    omega_i: np.ndarray,
    omega_o: np.ndarray,
    normal: np.ndarray,
    axis: np.ndarray,
    alpha,
    optical_depth: float = DEFAULT_OPTICAL_DEPTH,
    cos_clamp: float = COS_CLAMP,
) -> np.ndarray:
    """
    Unweighted specular lobe D(h) G / (4 cos_i cos_o) in the ply frame.

    Zero wherever either direction is at or below the ply surface.
    """
    raw_i = _dot(omega_i, normal)
    raw_o = _dot(omega_o, normal)
    half = np.asarray(omega_i) + np.asarray(omega_o)
    norm = np.linalg.norm(half, axis=-1, keepdims=True)
    half = half / np.where(norm > 0.0, norm, 1.0)

    d = density(half, axis, alpha)
    lam = lambda_term(omega_i, axis, alpha, normal, cos_clamp) + lambda_term(omega_o, axis, alpha, normal, cos_clamp)
    g = attenuation(lam, optical_depth)
    cos_i = np.maximum(raw_i, cos_clamp)
    cos_o = np.maximum(raw_o, cos_clamp)
    value = d * g / (4.0 * cos_i * cos_o)
    return np.where((raw_i > 0.0) & (raw_o > 0.0), value, 0.0)


@dataclass(frozen=True, eq=False)
class FiberFrame:
    """
    Microflake frame for a ply: fiber axis, roughness and the rotated S.

    ``S = alpha^2 a a^T + (I - a a^T)`` is the distribution matrix
    diag(1, 1, alpha^2) rotated so its third axis lies along ``axis``.
    """
    axis: np.ndarray
    alpha: float
    normal: np.ndarray = field(default_factory=lambda: UP.copy())

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(axis)
        if not np.isfinite(norm) or norm == 0.0:
            raise DomainValidationError("Fiber axis must be a non-zero vector")
        if not 0.0 < self.alpha <= 1.0:
            raise parameter_range_error('alpha', self.alpha, (0.0, 1.0))
        normal = np.asarray(self.normal, dtype=np.float64).reshape(3)
        object.__setattr__(self, 'axis', axis / norm)
        object.__setattr__(self, 'normal', normal / np.linalg.norm(normal))

    @property
    def S(self) -> np.ndarray:
        outer = np.outer(self.axis, self.axis)
        return self.alpha ** 2 * outer + (np.eye(3) - outer)

    @property
    def S_inv(self) -> np.ndarray:
        outer = np.outer(self.axis, self.axis)
        return outer / self.alpha ** 2 + (np.eye(3) - outer)


def microflake_density(h: np.ndarray, frame: FiberFrame, alpha: Optional[float] = None) -> float:
    """
    Evaluate D(h) for a unit half vector.

    Raises:
        DomainValidationError: When ``h`` is not unit length or alpha <= 0
    """
    h = np.asarray(h, dtype=np.float64)
    if abs(np.linalg.norm(h) - 1.0) > 1e-6:
        raise DomainValidationError("Half vector must be unit length", details=str(h))
    a = frame.alpha if alpha is None else alpha
    return float(density(h, frame.axis, a))


def smith_lambda(omega: np.ndarray, frame: FiberFrame, cos_clamp: float = COS_CLAMP) -> float:
    """Lambda(omega) = sigma(omega) / cos(theta) measured against the frame normal."""
    return float(lambda_term(np.asarray(omega, dtype=np.float64), frame.axis, frame.alpha, frame.normal, cos_clamp))


def attenuation_G(
    pair: DirectionPair,
    frame: FiberFrame,
    optical_depth: float = DEFAULT_OPTICAL_DEPTH,
    cos_clamp: float = COS_CLAMP,
) -> float:
    """Attenuation for a direction pair; symmetric in the two directions."""
    total = smith_lambda(pair.omega_i, frame, cos_clamp) + smith_lambda(pair.omega_o, frame, cos_clamp)
    return float(attenuation(total, optical_depth))


def sphere_quadrature(n: int = 512) -> Tuple[np.ndarray, np.ndarray]:
    """Midpoint rule over (cos theta, phi): n x 2n unit directions and their solid-angle weights."""
    mu = -1.0 + (np.arange(n) + 0.5) * (2.0 / n)
    phi = (np.arange(2 * n) + 0.5) * (math.pi / n)
    mu_g, phi_g = np.meshgrid(mu, phi, indexing='ij')
    sin_t = np.sqrt(1.0 - mu_g ** 2)
    dirs = np.stack([sin_t * np.cos(phi_g), sin_t * np.sin(phi_g), mu_g], axis=-1).reshape(-1, 3)
    weights = np.full(dirs.shape[0], (2.0 / n) * (math.pi / n))
    return dirs, weights


def density_normalization(alpha: float, n: int = 512) -> float:
    """Numerically integrated sum of D(h) sigma(h) over the sphere for a z-aligned fiber."""
    dirs, weights = sphere_quadrature(n)
    values = density(dirs, UP, alpha) * projected_sigma(dirs, UP, alpha)
    return float(np.sum(values * weights))
