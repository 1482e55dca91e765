"""
Image persistence: linear float32 arrays (.npy) and tone-mapped PNGs.
"""

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from ..domain.exceptions import ImageDimensionError, format_error
from ..utils.logging import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


def tone_map(image: np.ndarray, gamma: float = 2.2) -> np.ndarray:
    """Clamp linear RGB to [0, 1], apply 1/gamma and quantize to uint8."""
    clipped = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return (clipped ** (1.0 / gamma) * 255.0 + 0.5).astype(np.uint8)


class ImageRepository:
    """Writes rendered frames and error maps."""

    def save_linear(self, image: np.ndarray, path: PathLike) -> Path:
        path = Path(path).with_suffix('.npy')
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, np.asarray(image, dtype=np.float32))
        return path

    def load_linear(self, path: PathLike) -> np.ndarray:
        path = Path(path)
        try:
            image = np.load(path)
        except (OSError, ValueError) as e:
            raise format_error(str(path), f"unreadable image: {e}", ImageDimensionError)
        if image.ndim != 3 or image.shape[2] != 3:
            raise ImageDimensionError("Linear images must be (H, W, 3)", details=f"{path}: {image.shape}")
        return image

    def save_png(self, image: np.ndarray, path: PathLike, gamma: float = 2.2) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(tone_map(image, gamma), mode='RGB').save(path)
        return path

    def save_rgb8(self, image: np.ndarray, path: PathLike) -> Path:
        """Already display-ready uint8 RGB, e.g. an error heat map."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(np.asarray(image, dtype=np.uint8), mode='RGB').save(path)
        return path

    def save_render(self, image: np.ndarray, stem: PathLike, gamma: float = 2.2) -> Path:
        """Write ``stem.npy`` and ``stem.png``; returns the PNG path."""
        stem = Path(stem)
        self.save_linear(image, stem.with_suffix('.npy'))
        png = self.save_png(image, stem.with_suffix('.png'), gamma)
        logger.debug("Saved render", path=str(png), shape=list(np.shape(image)))
        return png
