"""
Point shading of a fabric texel, split into the four yarn components.

Diffuse and specular values are routed to the warp or weft slots of the
texel's yarn; gaps contribute nothing. A light below the surface selects
the transmission branch, which mirrors the light direction through the
surface for the specular lobe and keeps only the flat diffuse term.
"""

import math
from typing import Optional, Union

import numpy as np

from .microflake import COS_CLAMP, specular_kernel
from ..domain.enums import YarnId
from ..domain.exceptions import DomainValidationError
from ..domain.models import ComponentQuad, DirectionPair, FabricParams, Texel

MIRROR_Z = np.array([1.0, 1.0, -1.0])


def specular_point(
    pair: DirectionPair,
    n_p: np.ndarray,
    t_p: np.ndarray,
    alpha: float,
    optical_depth: float = 2.0,
    cos_clamp: float = COS_CLAMP,
) -> float:
    """Reflection-mode specular kernel; zero when either direction is below the ply."""
    return float(specular_kernel(pair.omega_i, pair.omega_o, n_p, t_p, alpha, optical_depth, cos_clamp))


def diffuse_point(pair: DirectionPair, n_p: np.ndarray, w: float, cos_clamp: float = COS_CLAMP) -> float:
    """Blend of the ply-normal and flat Lambertian terms for a light above the surface."""
    wi = pair.omega_i
    ply = max(0.0, float(np.dot(wi, n_p)))
    flat = max(float(wi[2]), cos_clamp)
    return w * ply / (math.pi * flat) + (1.0 - w) / math.pi


def eval_components_batch(
    normal: np.ndarray,
    orientation: np.ndarray,
    yarn_id: np.ndarray,
    omega_i: np.ndarray,
    omega_o: np.ndarray,
    params: FabricParams,
    cos_clamp: float = COS_CLAMP,
) -> np.ndarray:
    """
    Vectorised point components for N texels.

    Args:
        normal: (N, 3) ply normals
        orientation: (N, 3) ply orientations
        yarn_id: (N,) yarn ids
        omega_i: (3,) or (N, 3) light directions
        omega_o: (3,) or (N, 3) view directions
        params: Fabric parameters (roughness per yarn, w, optical depth)

    Returns:
        (N, 4) array in C_warp, C_weft, S_warp, S_weft order
    """
    normal = np.asarray(normal, dtype=np.float64)
    orientation = np.asarray(orientation, dtype=np.float64)
    yarn_id = np.asarray(yarn_id)
    count = normal.shape[0]
    wi = np.broadcast_to(np.asarray(omega_i, dtype=np.float64), (count, 3))
    wo = np.broadcast_to(np.asarray(omega_o, dtype=np.float64), (count, 3))

    warp = yarn_id == YarnId.WARP
    weft = yarn_id == YarnId.WEFT
    btdf = wi[:, 2] < 0.0
    wi_lobe = np.where(btdf[:, None], wi * MIRROR_Z, wi)

    alpha = np.where(warp, params.alpha_warp, params.alpha_weft)
    specular = specular_kernel(wi_lobe, wo, normal, orientation, alpha, params.optical_depth, cos_clamp)

    ply = np.maximum(np.sum(wi * normal, axis=-1), 0.0)
    flat = np.maximum(wi[:, 2], cos_clamp)
    reflect = params.w * ply / (math.pi * flat) + (1.0 - params.w) / math.pi
    transmit = (1.0 - params.w) / math.pi * np.maximum(-wi[:, 2], 0.0)
    diffuse = np.where(btdf, transmit, reflect)

    quad = np.zeros((count, 4))
    quad[:, 0] = np.where(warp, diffuse, 0.0)
    quad[:, 1] = np.where(weft, diffuse, 0.0)
    quad[:, 2] = np.where(warp, specular, 0.0)
    quad[:, 3] = np.where(weft, specular, 0.0)
    return quad


def eval_point_components(
    texel: Texel,
    pair: DirectionPair,
    params: FabricParams,
    cos_clamp: float = COS_CLAMP,
) -> ComponentQuad:
    """Component quad for one texel and direction pair."""
    if texel.yarn_id == YarnId.GAP:
        return ComponentQuad.zero()
    quad = eval_components_batch(
        texel.normal[None, :],
        texel.orientation[None, :],
        np.array([int(texel.yarn_id)]),
        pair.omega_i,
        pair.omega_o,
        params,
        cos_clamp,
    )
    return ComponentQuad.from_array(quad[0])


def combine(
    quad: Union[ComponentQuad, np.ndarray],
    params: Optional[FabricParams] = None,
    albedos: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Weight the four components by their albedos and sum to RGB.

    ``albedos`` overrides the params with a (4, 3) array or a per-point
    (..., 4, 3) array, e.g. albedo textures averaged over a footprint.
    """
    values = quad.as_array() if isinstance(quad, ComponentQuad) else np.asarray(quad, dtype=np.float64)
    if albedos is None:
        if params is None:
            raise DomainValidationError("combine needs either params or albedos")
        albedos = params.albedo_array()
    rgb = np.einsum('...k,...kc->...c', values, np.asarray(albedos, dtype=np.float64))
    return np.maximum(rgb, 0.0)
