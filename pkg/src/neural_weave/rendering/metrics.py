"""
Image comparison metrics.
"""

from typing import List, Optional, Sequence

import matplotlib
import numpy as np

from ..domain.exceptions import ImageDimensionError


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ImageDimensionError("Images must have equal dimensions", details=f"{a.shape} vs {b.shape}")


def image_mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared error over linear RGB."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    return float(np.mean((a - b) ** 2))


def absolute_error(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-pixel absolute error averaged over channels, shape (H, W)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    diff = np.abs(a - b)
    return diff.mean(axis=-1) if diff.ndim == 3 else diff


def error_heat_map(a: np.ndarray, b: np.ndarray, vmax: Optional[float] = None, colormap: str = 'inferno') -> np.ndarray:
    """
    Colour-mapped per-pixel absolute error as an (H, W, 3) uint8 image.

    ``vmax`` fixes the top of the colour scale; by default the largest error.
    """
    error = absolute_error(a, b)
    top = float(error.max()) if vmax is None else float(vmax)
    scaled = error / top if top > 0.0 else np.zeros_like(error)
    rgba = matplotlib.colormaps[colormap](np.clip(scaled, 0.0, 1.0))
    return (rgba[..., :3] * 255.0 + 0.5).astype(np.uint8)


def adjacent_frame_mse(frames: Sequence[np.ndarray]) -> List[float]:
    """MSE between consecutive frames of a sequence."""
    return [image_mse(frames[k], frames[k + 1]) for k in range(len(frames) - 1)]
