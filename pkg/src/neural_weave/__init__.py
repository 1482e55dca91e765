"""
neural_weave: a footprint-aware neural BSDF for woven fabrics.

Procedural weave geometry, a microflake point shading model, a Monte
Carlo oracle for footprint-aggregated scattering, dataset generation,
an encoder/decoder network and a direct-illumination renderer.
"""

from .__version__ import __version__

__all__ = ['__version__']
