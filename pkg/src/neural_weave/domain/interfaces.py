"""
Domain interfaces and protocols for dependency injection.

Defines the contracts shared by the oracle, the network and the renderer
so estimators and map sources can be swapped and mocked in tests.
"""

from typing import Protocol, Sequence

import numpy as np

from .models import FabricParams, Footprint, GeometryMaps, MaterialLatent, MaterialSpec


class MapProvider(Protocol):
    """Protocol for anything that hands out geometry maps for a material."""

    def maps_for(self, spec: MaterialSpec) -> GeometryMaps:
        """
        Get geometry maps for a material, synthesizing them if needed.

        Args:
            spec: Material whose pattern, twist, inclination, gap and height
                scale define the maps

        Returns:
            Immutable GeometryMaps
        """
        ...


class LatentEncoder(Protocol):
    """Protocol for encoders turning geometry into a material latent."""

    def encode_material(self, maps: GeometryMaps, roughness: float, height_scale: float) -> MaterialLatent:
        """Encode one material. Deterministic for fixed weights."""
        ...


class ComponentEstimator(Protocol):
    """Protocol for per-pixel estimators of the aggregated component quad."""

    def estimate(
        self,
        material_id: str,
        footprints: Sequence[Footprint],
        omega_i: np.ndarray,
        omega_o: np.ndarray,
        seed: int,
        indices: Sequence[int],
    ) -> np.ndarray:
        """
        Estimate component quads for a batch of shading points.

        Args:
            material_id: Scene material being shaded
            footprints: One footprint per shading point
            omega_i: (N, 3) light directions in the shading frame
            omega_o: (N, 3) view directions in the shading frame
            seed: Base seed
            indices: Pixel index per shading point; random streams are
                keyed by (seed, index)

        Returns:
            (N, 4) array in ComponentQuad order
        """
        ...

    def params_for(self, material_id: str) -> FabricParams:
        """Shading parameters (albedos) used to combine the quads."""
        ...

    def validate(self, material_ids: Sequence[str]) -> None:
        """Raise when the estimator cannot shade one of the materials."""
        ...
