"""Binary container for embedding/feature vectors keyed by record id.

Layout (all integers little-endian):

    magic   "MMEB" (4 bytes)
    version u32 = 1
    count   u32 number of records
    dim     u32 vector length
    then per record: id_length u16, UTF-8 id bytes, dim float32 values

Values round-trip bit-exactly at single precision.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CorruptionError, DimensionError, EmbeddingFormatError, ValidationError

MAGIC = b"MMEB"
VERSION = 1
EMBEDDING_DIMS = (510, 768)  # speech / text embedding sizes


def write_embedding_file(path, records) -> None:
    """Write an ordered mapping (or list of pairs) of id -> vector."""
    items = list(records.items()) if hasattr(records, "items") else list(records)
    dim = None
    seen = set()
    chunks = []
    for record_id, values in items:
        values = np.asarray(values, dtype="<f4").reshape(-1)
        if dim is None:
            dim = values.size
            if dim < 1:
                raise ValidationError("vectors must have at least one dimension")
        elif values.size != dim:
            raise DimensionError(f"record {record_id!r} has dimension {values.size}, expected {dim}")
        if record_id in seen:
            raise ValidationError(f"duplicate record id {record_id!r}")
        seen.add(record_id)
        id_bytes = str(record_id).encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise ValidationError(f"record id too long: {record_id!r}")
        chunks.append(struct.pack("<H", len(id_bytes)) + id_bytes + values.tobytes())
    if dim is None:
        dim = 0
    header = MAGIC + struct.pack("<III", VERSION, len(items), dim)
    with open(path, "wb") as fh:
        fh.write(header)
        for chunk in chunks:
            fh.write(chunk)


def read_embedding_file(path, expected_dim: int | None = None) -> dict:
    """Read a MMEB file into an ordered {id: float32 vector} map.

    Raises EmbeddingFormatError for a bad magic/version, DimensionError when
    the header dim differs from `expected_dim`, and CorruptionError (with a
    byte offset) for truncation, duplicate ids, or trailing garbage.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16:
        raise CorruptionError("file shorter than the fixed header", byte_offset=len(blob))
    if blob[0:4] != MAGIC:
        raise EmbeddingFormatError(f"bad magic {blob[0:4]!r}, expected {MAGIC!r}")
    version, count, dim = struct.unpack_from("<III", blob, 4)
    if version != VERSION:
        raise EmbeddingFormatError(f"unsupported version {version}, expected {VERSION}")
    if expected_dim is not None and count > 0 and dim != expected_dim:
        raise DimensionError(f"embedding file has dimension {dim}, expected {expected_dim}")

    records: dict = {}
    offset = 16
    vec_bytes = 4 * dim
    for _ in range(count):
        if offset + 2 > len(blob):
            raise CorruptionError("truncated before record id length", byte_offset=offset)
        (id_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        if offset + id_len > len(blob):
            raise CorruptionError("truncated inside record id", byte_offset=offset)
        try:
            record_id = blob[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptionError("record id is not valid UTF-8", byte_offset=offset)
        offset += id_len
        if offset + vec_bytes > len(blob):
            raise CorruptionError(f"truncated inside vector for {record_id!r}", byte_offset=offset)
        values = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if record_id in records:
            raise CorruptionError(f"duplicate record id {record_id!r}", byte_offset=offset)
        records[record_id] = values
    if offset != len(blob):
        raise CorruptionError("trailing bytes after the declared records", byte_offset=offset)
    return records
