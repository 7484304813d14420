"""Binary tensor files: magic "FQET", version, rank, dims, complex128."""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError

TENSOR_MAGIC = b"FQET"
TENSOR_VERSION = 1


def write_tensor(path, array: np.ndarray) -> None:
    array = np.asarray(array, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<II", TENSOR_VERSION, array.ndim))
        fh.write(struct.pack(f"<{array.ndim}Q", *array.shape))
        fh.write(np.ascontiguousarray(array, dtype="<c16").tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != TENSOR_MAGIC:
        raise FormatError("not a tensor file (bad magic)")
    try:
        version, rank = struct.unpack_from("<II", data, 4)
    except struct.error as exc:
        raise FormatError("truncated tensor header") from exc
    if version != TENSOR_VERSION:
        raise FormatError(f"unsupported tensor format version {version}")
    offset = 12
    try:
        dims = struct.unpack_from(f"<{rank}Q", data, offset)
    except struct.error as exc:
        raise FormatError("truncated tensor dims") from exc
    offset += 8 * rank
    count = int(np.prod(dims)) if rank else 1
    if offset + 16 * count > len(data):
        raise FormatError("truncated tensor payload")
    flat = np.frombuffer(data[offset:offset + 16 * count], dtype="<c16")
    return flat.reshape(dims).copy()
