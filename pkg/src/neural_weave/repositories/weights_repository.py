"""
Network weight persistence: the WWNN format.

Layout (little-endian):
    magic ``WWNN`` | version u32 | 32-byte SHA-256 topology hash
    | tensor count u32 | per tensor: name length u16, UTF-8 name,
    rank u8, dims u32 x rank, float32 data
"""

import os
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from ..domain.exceptions import TopologyMismatchError, WeightFormatError, format_error
from ..network.model import NeuralFabricModel
from ..utils.logging import get_logger

logger = get_logger(__name__)

MAGIC = b"WWNN"
VERSION = 1
_HEADER = struct.Struct("<4sI32sI")
_NAME_LEN = struct.Struct("<H")
_RANK = struct.Struct("<B")

PathLike = Union[str, Path]


def _weight_error(path: Path, reason: str) -> WeightFormatError:
    return format_error(str(path), reason, WeightFormatError)


class WeightsRepository:
    """Saves and loads model weights with a topology check."""

    def write_state(self, path: PathLike, topology_hash: bytes, state: Dict[str, np.ndarray]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if len(topology_hash) != 32:
            raise WeightFormatError("Topology hash must be 32 bytes")
        chunks = [_HEADER.pack(MAGIC, VERSION, topology_hash, len(state))]
        for name, value in state.items():
            array = np.ascontiguousarray(value, dtype='<f4')
            encoded = name.encode('utf-8')
            chunks.append(_NAME_LEN.pack(len(encoded)))
            chunks.append(encoded)
            chunks.append(_RANK.pack(array.ndim))
            chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
            chunks.append(array.tobytes())
        tmp = path.with_suffix(path.suffix + '.tmp')
        tmp.write_bytes(b"".join(chunks))
        os.replace(tmp, path)
        return path

    def read_state(self, path: PathLike) -> Tuple[bytes, 'OrderedDict[str, np.ndarray]']:
        """
        Read the topology hash and named tensors.

        Raises:
            WeightFormatError: On bad magic, version or a truncated file
        """
        path = Path(path)
        data = path.read_bytes()
        if len(data) < _HEADER.size:
            raise _weight_error(path, "file shorter than header")
        magic, version, topology_hash, count = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise _weight_error(path, f"bad magic {magic!r}")
        if version != VERSION:
            raise _weight_error(path, f"unsupported version {version}")

        offset = _HEADER.size
        state: 'OrderedDict[str, np.ndarray]' = OrderedDict()
        try:
            for _ in range(count):
                (name_len,) = _NAME_LEN.unpack_from(data, offset)
                offset += _NAME_LEN.size
                name = data[offset:offset + name_len].decode('utf-8')
                offset += name_len
                (rank,) = _RANK.unpack_from(data, offset)
                offset += _RANK.size
                shape = struct.unpack_from(f"<{rank}I", data, offset)
                offset += 4 * rank
                size = int(np.prod(shape, dtype=np.int64))
                if offset + 4 * size > len(data):
                    raise _weight_error(path, f"tensor {name} cut short")
                state[name] = np.frombuffer(data, dtype='<f4', count=size, offset=offset).reshape(shape).copy()
                offset += 4 * size
        except struct.error as e:
            raise _weight_error(path, f"truncated tensor table: {e}")
        if offset != len(data):
            raise _weight_error(path, "trailing bytes after tensors")
        return topology_hash, state

    def save(self, model: NeuralFabricModel, path: PathLike) -> Path:
        path = self.write_state(path, model.topology_hash(), model.numpy_state())
        logger.debug("Saved weights", path=str(path), parameters=model.parameter_count())
        return path

    def load_into(self, model: NeuralFabricModel, path: PathLike) -> NeuralFabricModel:
        """
        Load weights into an already constructed model.

        Raises:
            TopologyMismatchError: When the stored hash differs from the model's
        """
        topology_hash, state = self.read_state(path)
        if topology_hash != model.topology_hash():
            raise TopologyMismatchError(
                "Weights were saved for a different network topology",
                details=f"{path}: stored {topology_hash.hex()[:16]}, model {model.topology_hash().hex()[:16]}",
            )
        model.load_numpy_state(state)
        model.eval()
        logger.debug("Loaded weights", path=str(path))
        return model
