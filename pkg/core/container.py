"""
Tensor Container Format

Single-file storage for named arrays, shared by head-model files and
training checkpoints.

Layout::

    [8 bytes]  little-endian uint64 length of the JSON index
    [N bytes]  UTF-8 JSON index {name: {shape, dtype, byte_offset}}
    [...]      concatenated little-endian array data

``byte_offset`` is relative to the start of the data section. ``dtype``
is ``"f32"`` (the default when omitted) or ``"i32"``. An optional
``"__metadata__"`` entry holds arbitrary JSON.
"""

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from core.errors import CheckpointError

METADATA_KEY = "__metadata__"

_DTYPES = {"f32": np.dtype("<f4"), "i32": np.dtype("<i4")}


def _dtype_tag(array: np.ndarray) -> str:
    if np.issubdtype(array.dtype, np.integer) or array.dtype == np.bool_:
        return "i32"
    return "f32"


def encode_container(
    tensors: dict[str, np.ndarray], metadata: dict[str, Any] | None = None
) -> bytes:
    """Serialize arrays (sorted by name) and metadata to bytes."""
    index: dict[str, Any] = {}
    chunks: list[bytes] = []
    offset = 0
    for name in sorted(tensors):
        if name == METADATA_KEY:
            raise CheckpointError(f"{METADATA_KEY} is reserved")
        array = np.asarray(tensors[name])
        tag = _dtype_tag(array)
        raw = np.ascontiguousarray(array, dtype=_DTYPES[tag]).tobytes()
        index[name] = {"byte_offset": offset, "dtype": tag, "shape": list(array.shape)}
        chunks.append(raw)
        offset += len(raw)
    if metadata is not None:
        index[METADATA_KEY] = metadata
    header = json.dumps(index, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return struct.pack("<Q", len(header)) + header + b"".join(chunks)


def decode_container(payload: bytes, source: str = "<bytes>") -> tuple[
    dict[str, np.ndarray], dict[str, Any]
]:
    """
    Parse container bytes.

    Returns:
        Tuple of (arrays by name, metadata dict)

    Raises:
        CheckpointError: corrupt index or truncated data
    """
    if len(payload) < 8:
        raise CheckpointError(f"{source}: file too short for a container header")
    (header_len,) = struct.unpack("<Q", payload[:8])
    if 8 + header_len > len(payload):
        raise CheckpointError(f"{source}: truncated index ({header_len} bytes declared)")
    try:
        index = json.loads(payload[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source}: corrupt index: {e}") from e
    if not isinstance(index, dict):
        raise CheckpointError(f"{source}: corrupt index: expected an object")

    blob = memoryview(payload)[8 + header_len :]
    metadata = index.pop(METADATA_KEY, {}) or {}
    arrays: dict[str, np.ndarray] = {}
    for name, entry in index.items():
        try:
            shape = tuple(int(s) for s in entry["shape"])
            offset = int(entry["byte_offset"])
            dtype = _DTYPES[entry.get("dtype", "f32")]
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f"{source}: corrupt index entry {name!r}: {e}") from e
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + count * dtype.itemsize
        if offset < 0 or end > len(blob):
            raise CheckpointError(
                f"{source}: truncated data for {name!r} (needs bytes {offset}..{end}, "
                f"have {len(blob)})"
            )
        arrays[name] = np.frombuffer(blob[offset:end], dtype=dtype).reshape(shape).copy()
    return arrays, metadata


def write_container(
    path: str | Path, tensors: dict[str, np.ndarray], metadata: dict[str, Any] | None = None
) -> Path:
    """Write a container file, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_container(tensors, metadata))
    return path


def read_container(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Read a container file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"container file not found: {path}")
    return decode_container(path.read_bytes(), source=str(path))
