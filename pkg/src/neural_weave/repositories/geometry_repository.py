"""
Geometry map persistence: the WWGM binary blob and PNG previews.

Layout (little-endian): magic ``WWGM``, version u32, L_t u32, then beta,
warp radius and weft radius as float64, then L_t x L_t row-major texel
records of normal (3 x f32), orientation (3 x f32), height (f32) and
yarn id (u8).
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from ..domain.enums import YarnId
from ..domain.exceptions import GeometryError, format_error
from ..domain.models import GeometryMaps
from ..utils.logging import get_logger

logger = get_logger(__name__)

MAGIC = b"WWGM"
VERSION = 1
_HEADER = struct.Struct("<4sII3d")
TEXEL_DTYPE = np.dtype([
    ('normal', '<f4', (3,)),
    ('orientation', '<f4', (3,)),
    ('height', '<f4'),
    ('yarn_id', 'u1'),
])

PathLike = Union[str, Path]


class GeometryRepository:
    """Reads and writes geometry maps."""

    def save(self, maps: GeometryMaps, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        records = np.empty((maps.resolution, maps.resolution), dtype=TEXEL_DTYPE)
        records['normal'] = maps.normal
        records['orientation'] = maps.orientation
        records['height'] = maps.height
        records['yarn_id'] = maps.yarn_id
        with open(path, 'wb') as f:
            f.write(_HEADER.pack(MAGIC, VERSION, maps.resolution, maps.beta, maps.radius_warp, maps.radius_weft))
            f.write(records.tobytes())
        logger.debug("Saved geometry maps", path=str(path), resolution=maps.resolution)
        return path

    def load(self, path: PathLike) -> GeometryMaps:
        """
        Load maps written by ``save``.

        Raises:
            GeometryError: On bad magic, unknown version or a short file
        """
        path = Path(path)
        data = path.read_bytes()
        if len(data) < _HEADER.size:
            raise format_error(str(path), "file shorter than header", GeometryError)
        magic, version, resolution, beta, radius_warp, radius_weft = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise format_error(str(path), f"bad magic {magic!r}", GeometryError)
        if version != VERSION:
            raise format_error(str(path), f"unsupported version {version}", GeometryError)
        expected = _HEADER.size + resolution * resolution * TEXEL_DTYPE.itemsize
        if len(data) != expected:
            raise format_error(str(path), f"expected {expected} bytes, found {len(data)}", GeometryError)
        records = np.frombuffer(data, dtype=TEXEL_DTYPE, offset=_HEADER.size).reshape(resolution, resolution)
        return GeometryMaps(
            normal=records['normal'].astype(np.float64),
            orientation=records['orientation'].astype(np.float64),
            height=records['height'].astype(np.float64),
            yarn_id=records['yarn_id'],
            beta=beta,
            radius_warp=radius_warp,
            radius_weft=radius_weft,
        )

    def export_png(self, maps: GeometryMaps, path: PathLike, channel: str = 'normal') -> Path:
        """
        Write an 8-bit preview of one map.

        ``normal`` and ``orientation`` remap [-1, 1] to [0, 255]; ``height``
        is min-max scaled; ``yarn`` paints warp red, weft blue, gaps black.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if channel in ('normal', 'orientation'):
            values = getattr(maps, channel)
            pixels = np.round((np.clip(values, -1.0, 1.0) + 1.0) * 127.5).astype(np.uint8)
        elif channel == 'height':
            h = maps.height
            span = float(h.max() - h.min()) or 1.0
            pixels = np.round((h - h.min()) / span * 255.0).astype(np.uint8)
        elif channel == 'yarn':
            pixels = np.zeros(maps.yarn_id.shape + (3,), dtype=np.uint8)
            pixels[maps.yarn_id == YarnId.WARP] = (220, 60, 60)
            pixels[maps.yarn_id == YarnId.WEFT] = (60, 60, 220)
        else:
            raise GeometryError(f"Unknown map channel: {channel}")
        # row 0 is v = 0; flip so v grows upward in the image
        Image.fromarray(np.ascontiguousarray(pixels[::-1])).save(path)
        return path
