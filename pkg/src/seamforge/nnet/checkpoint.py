"""Checkpoint container: JSON header, raw little-endian tensor blobs, CRC-32.

Layout:  [uint32 LE header length][UTF-8 JSON header][blobs][uint32 LE CRC-32]
The header lists tensor names, shapes, the blob dtype and a format version;
blobs follow in header order; the trailing CRC-32 covers the blob section.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import StateError

FORMAT_VERSION = 1

_DTYPES = {"float32": "<f4", "float64": "<f8"}


def save_checkpoint(path, tensors, meta=None, dtype="float32") -> None:
    """Write named tensors plus a free-form JSON meta block."""
    if dtype not in _DTYPES:
        raise StateError(f"unsupported checkpoint dtype {dtype!r}")
    le = _DTYPES[dtype]
    names = list(tensors)
    header = {
        "format_version": FORMAT_VERSION,
        "dtype": dtype,
        "tensors": [
            {"name": n, "shape": list(np.asarray(tensors[n]).shape)} for n in names
        ],
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = b"".join(
        np.ascontiguousarray(np.asarray(tensors[n], dtype=le)).tobytes() for n in names
    )
    crc = zlib.crc32(blob) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)
        fh.write(struct.pack("<I", crc))


def load_checkpoint(path):
    """Read back (tensors, meta); StateError on corruption."""
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise StateError(f"checkpoint too short: {path}")
    (header_len,) = struct.unpack_from("<I", raw, 0)
    header_end = 4 + header_len
    if header_end + 4 > len(raw):
        raise StateError(f"truncated checkpoint header: {path}")
    try:
        header = json.loads(raw[4:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise StateError(f"bad checkpoint header: {exc}") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise StateError(f"unsupported format version {header.get('format_version')}")
    dtype = header.get("dtype")
    if dtype not in _DTYPES:
        raise StateError(f"unsupported tensor dtype {dtype!r}")
    blob = raw[header_end:-4]
    (crc_stored,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(blob) & 0xFFFFFFFF != crc_stored:
        raise StateError(f"checkpoint CRC mismatch: {path}")
    itemsize = np.dtype(_DTYPES[dtype]).itemsize
    tensors = {}
    offset = 0
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * itemsize
        if offset + nbytes > len(blob):
            raise StateError(f"blob section shorter than declared: {path}")
        arr = np.frombuffer(blob, dtype=_DTYPES[dtype], count=count, offset=offset)
        tensors[entry["name"]] = arr.reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise StateError(f"blob section longer than declared: {path}")
    return tensors, header.get("meta", {})
