"""
Training dataset persistence: the WWDS binary format.

Layout (little-endian):
    magic ``WWDS`` | version u32 | header length u32 | JSON header
    | record count u64 | records | CRC32 u32 of everything before it

Records are fixed-size float32 rows, one file per material. Shards
written per chunk can be merged once every chunk is done.
"""

import json
import os
import struct
import zlib
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..domain.exceptions import (
    DatasetMergeError,
    DatasetTruncatedError,
    format_error,
)
from ..domain.models import ComponentQuad, DatasetHeader, DirectionPair, Footprint, QueryRecord
from ..utils.logging import get_logger

logger = get_logger(__name__)

MAGIC = b"WWDS"
VERSION = 1
_PREAMBLE = struct.Struct("<4sII")
_COUNT = struct.Struct("<Q")
_CRC = struct.Struct("<I")

RECORD_DTYPE = np.dtype([
    ('query_index', '<u4'),
    ('center', '<f4', (2,)),
    ('size', '<f4'),
    ('omega_i', '<f4', (3,)),
    ('omega_o', '<f4', (3,)),
    ('target', '<f4', (4,)),
])

COMPONENTS = ('c_warp', 'c_weft', 's_warp', 's_weft')
# header fields that must agree for shards to be merged
MERGE_KEYS = ('material', 'kernel', 'w', 'samples', 'seed', 'resolution', 'version')

PathLike = Union[str, Path]


def empty_records(count: int = 0) -> np.ndarray:
    return np.zeros(count, dtype=RECORD_DTYPE)


def records_from_queries(records: Sequence[QueryRecord]) -> np.ndarray:
    """Pack QueryRecords into the on-disk structured array."""
    out = empty_records(len(records))
    for k, record in enumerate(records):
        out[k] = (
            record.query_index,
            record.footprint.center,
            record.footprint.size,
            record.pair.omega_i,
            record.pair.omega_o,
            record.target.as_array(),
        )
    return out


def to_query_record(row: np.void, header: DatasetHeader) -> QueryRecord:
    return QueryRecord(
        query_index=int(row['query_index']),
        footprint=Footprint(
            (float(row['center'][0]), float(row['center'][1])), float(row['size']), header.kernel
        ),
        pair=DirectionPair(row['omega_i'].astype(np.float64), row['omega_o'].astype(np.float64)),
        target=ComponentQuad.from_array(row['target']),
    )


class DatasetRepository:
    """Reads, writes and merges WWDS dataset files."""

    def write(self, path: PathLike, header: DatasetHeader, records: np.ndarray) -> Path:
        """
        Write a dataset file atomically (temp file, then rename).

        Args:
            path: Destination file
            header: Run metadata stored as JSON
            records: Structured array with RECORD_DTYPE
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        records = np.ascontiguousarray(records, dtype=RECORD_DTYPE)
        header_bytes = json.dumps(header.to_dict(), sort_keys=True).encode('utf-8')
        body = b"".join([
            _PREAMBLE.pack(MAGIC, VERSION, len(header_bytes)),
            header_bytes,
            _COUNT.pack(records.shape[0]),
            records.tobytes(),
        ])
        tmp = path.with_suffix(path.suffix + '.tmp')
        with open(tmp, 'wb') as f:
            f.write(body)
            f.write(_CRC.pack(zlib.crc32(body) & 0xFFFFFFFF))
        os.replace(tmp, path)
        logger.debug("Wrote dataset", path=str(path), records=int(records.shape[0]))
        return path

    def read(self, path: PathLike) -> Tuple[DatasetHeader, np.ndarray]:
        """
        Read a whole dataset file.

        Raises:
            DatasetFormatError: Bad magic, version, header or checksum
            DatasetTruncatedError: File shorter than its declared contents
        """
        path = Path(path)
        data = path.read_bytes()
        if len(data) < _PREAMBLE.size:
            raise format_error(str(path), "file shorter than preamble", DatasetTruncatedError)
        magic, version, header_len = _PREAMBLE.unpack_from(data)
        if magic != MAGIC:
            raise format_error(str(path), f"bad magic {magic!r}")
        if version != VERSION:
            raise format_error(str(path), f"unsupported version {version}")

        offset = _PREAMBLE.size
        if len(data) < offset + header_len + _COUNT.size:
            raise format_error(str(path), "header cut short", DatasetTruncatedError)
        try:
            header = DatasetHeader.from_dict(json.loads(data[offset:offset + header_len].decode('utf-8')))
        except (ValueError, KeyError) as e:
            raise format_error(str(path), f"unreadable header: {e}")
        offset += header_len
        (count,) = _COUNT.unpack_from(data, offset)
        offset += _COUNT.size

        end = offset + count * RECORD_DTYPE.itemsize
        if len(data) < end + _CRC.size:
            raise format_error(
                str(path), f"expected {count} records, file ends early", DatasetTruncatedError
            )
        if len(data) > end + _CRC.size:
            raise format_error(str(path), "trailing bytes after checksum")
        (crc,) = _CRC.unpack_from(data, end)
        if zlib.crc32(data[:end]) & 0xFFFFFFFF != crc:
            raise format_error(str(path), "checksum mismatch")
        records = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=offset).copy()
        return header, records

    def read_header(self, path: PathLike) -> DatasetHeader:
        return self.read(path)[0]

    def iter_records(self, path: PathLike) -> Iterator[QueryRecord]:
        """Stream the records of a file as QueryRecords."""
        header, records = self.read(path)
        for row in records:
            yield to_query_record(row, header)

    def merge_shards(self, paths: Sequence[PathLike], out: PathLike) -> int:
        """
        Concatenate shard files into one dataset, ordered by query index.

        Raises:
            DatasetMergeError: When shard headers disagree on material,
                kernel, w, sample count, seed or resolution
        """
        if not paths:
            raise DatasetMergeError("No shards to merge")
        headers: List[DatasetHeader] = []
        parts: List[np.ndarray] = []
        for shard in paths:
            header, records = self.read(shard)
            headers.append(header)
            parts.append(records)

        reference = headers[0].to_dict()
        for shard, header in zip(paths[1:], headers[1:]):
            current = header.to_dict()
            mismatched = [key for key in MERGE_KEYS if current[key] != reference[key]]
            if mismatched:
                raise DatasetMergeError(
                    "Shard headers disagree", details=f"{shard}: {', '.join(mismatched)}"
                )

        merged = np.concatenate(parts)
        merged = merged[np.argsort(merged['query_index'], kind='stable')]
        self.write(out, headers[0], merged)
        logger.debug("Merged dataset shards", shards=len(paths), records=int(merged.shape[0]))
        return int(merged.shape[0])

    def summarize(self, path: PathLike) -> pd.DataFrame:
        """Per-component statistics of the stored targets, split by BRDF/BTDF."""
        _, records = self.read(path)
        frame = pd.DataFrame(records['target'].astype(np.float64), columns=list(COMPONENTS))
        frame['mode'] = np.where(records['omega_i'][:, 2] < 0.0, 'btdf', 'brdf')
        frame['size'] = records['size'].astype(np.float64)
        summary = frame.groupby('mode')[list(COMPONENTS)].agg(['mean', 'std', 'max'])
        summary['records'] = frame.groupby('mode').size()
        return summary
