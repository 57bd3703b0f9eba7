"""
Named-tensor container used for kernels and checkpoints.

Layout (all integers little-endian):

    8 bytes   magic  b"DDSRTNSR"
    4 bytes   uint32 format version
    8 bytes   uint64 header length in bytes
    N bytes   UTF-8 JSON header {"meta": {...}, "tensors": [{name, dtype, shape, offset, nbytes}]}
    payload   concatenated little-endian float32 tensors, offsets relative to payload start
"""

import json
import math
import struct
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
import torch

from ..errors import TensorContainerError
from .file_ops import PathLike, atomic_write_bytes

MAGIC = b"DDSRTNSR"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<8sIQ")
_DTYPE = np.dtype("<f4")


def _as_float32(value) -> np.ndarray:
    if isinstance(value, torch.Tensor):
        value = value.detach().cpu().numpy()
    arr = np.asarray(value)
    if not np.issubdtype(arr.dtype, np.floating) and not np.issubdtype(arr.dtype, np.integer):
        raise TensorContainerError(f"unsupported dtype {arr.dtype}")
    return np.ascontiguousarray(arr, dtype=_DTYPE)


def encode_container(tensors: Mapping[str, Any], meta: Optional[dict] = None) -> bytes:
    entries = []
    chunks = []
    offset = 0
    for name, value in tensors.items():
        arr = _as_float32(value)
        raw = arr.tobytes(order="C")
        entries.append(
            {
                "name": name,
                "dtype": "float32",
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        chunks.append(raw)
        offset += len(raw)

    header = json.dumps({"meta": meta or {}, "tensors": entries}, sort_keys=True).encode("utf-8")
    return _PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header)) + header + b"".join(chunks)


def decode_container(blob: bytes) -> Tuple[Dict[str, np.ndarray], dict]:
    if len(blob) < _PREAMBLE.size:
        raise TensorContainerError("truncated container: missing preamble")
    magic, version, header_len = _PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise TensorContainerError(f"bad magic bytes {magic!r}")
    if version != FORMAT_VERSION:
        raise TensorContainerError(f"unsupported container version {version} (expected {FORMAT_VERSION})")

    header_end = _PREAMBLE.size + header_len
    if len(blob) < header_end:
        raise TensorContainerError("truncated container: header cut short")
    try:
        header = json.loads(blob[_PREAMBLE.size:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TensorContainerError(f"unreadable header: {e}") from e

    payload = memoryview(blob)[header_end:]
    tensors: Dict[str, np.ndarray] = {}
    expected_offset = 0
    for entry in header.get("tensors", []):
        name = entry.get("name")
        if name in tensors:
            raise TensorContainerError(f"duplicate tensor name {name!r}")
        if entry.get("dtype") != "float32":
            raise TensorContainerError(f"tensor {name!r}: unsupported dtype {entry.get('dtype')!r}")
        shape = tuple(int(d) for d in entry.get("shape", []))
        if any(d < 0 for d in shape):
            raise TensorContainerError(f"tensor {name!r}: negative dimension in shape {shape}")
        nbytes = int(entry.get("nbytes", -1))
        if math.prod(shape) * _DTYPE.itemsize != nbytes:
            raise TensorContainerError(
                f"tensor {name!r}: shape mismatch, shape {shape} does not describe {nbytes} bytes"
            )
        if int(entry.get("offset", -1)) != expected_offset:
            raise TensorContainerError(f"tensor {name!r}: offset mismatch")
        if expected_offset + nbytes > len(payload):
            raise TensorContainerError(f"truncated payload: tensor {name!r} extends past end of file")
        raw = payload[expected_offset:expected_offset + nbytes]
        tensors[name] = np.frombuffer(raw, dtype=_DTYPE).reshape(shape).copy()
        expected_offset += nbytes

    if expected_offset != len(payload):
        raise TensorContainerError(
            f"payload size mismatch: header describes {expected_offset} bytes, file holds {len(payload)}"
        )
    return tensors, header.get("meta", {})


def write_container(path: PathLike, tensors: Mapping[str, Any], meta: Optional[dict] = None) -> Path:
    return atomic_write_bytes(path, encode_container(tensors, meta))


def read_container(path: PathLike) -> Tuple[Dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise TensorContainerError(f"container not found: {path}")
    return decode_container(path.read_bytes())
