"""DAMT tensor files: the bit-exact on-disk format for maps and masks.

Layout (all integers little-endian):

    offset  size  field
    0       4     magic, the ASCII bytes "DAMT"
    4       1     version, currently 1
    5       1     dtype: 0 = 32-bit float payload, 1 = bit-packed mask
    6       1     ndims (this implementation reads and writes rank 2)
    7       4*n   dims, unsigned 32-bit each
    ...           payload, row-major; dtype 1 packs rows*cols bits into
                  ceil(rows*cols / 8) bytes, LSB-first within each byte

Dense payloads are written as float32; in-memory ``DenseMap`` values are
demoted on write, so a write/read cycle is the identity exactly on values
that are float32-representable (everything previously read from a file is).
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .containers import BitMask, DenseMap, _packed_size

MAGIC = b"DAMT"
VERSION = 1
DTYPE_F32 = 0
DTYPE_MASK = 1

_U32_MAX = 2**32 - 1


class DamtError(ValueError):
    """Raised for malformed DAMT headers or payloads."""


def _check_dims(dims: tuple[int, ...]) -> None:
    for d in dims:
        if d > _U32_MAX:
            raise DamtError(f"dimension {d} overflows 32 bits")


def tensor_bytes(t: DenseMap | BitMask) -> bytes:
    """Serialize a container to DAMT bytes."""
    if isinstance(t, DenseMap):
        _check_dims((t.rows, t.cols))
        dtype, dims = DTYPE_F32, (t.rows, t.cols)
        payload = t.data.astype("<f4").tobytes()
    elif isinstance(t, BitMask):
        _check_dims((t.rows, t.cols))
        dtype, dims = DTYPE_MASK, (t.rows, t.cols)
        payload = t.bits.tobytes()
    else:
        raise TypeError(f"cannot serialize {type(t).__name__}")
    header = MAGIC + struct.pack("<BBB", VERSION, dtype, len(dims))
    header += struct.pack(f"<{len(dims)}I", *dims)
    return header + payload


def tensor_from_bytes(buf: bytes) -> DenseMap | BitMask:
    """Parse DAMT bytes back into a container."""
    if len(buf) < 7:
        raise DamtError("truncated header")
    if buf[:4] != MAGIC:
        raise DamtError("not a DAMT file")
    version, dtype, ndims = struct.unpack_from("<BBB", buf, 4)
    if version != VERSION:
        raise DamtError(f"unsupported version {version}")
    if dtype not in (DTYPE_F32, DTYPE_MASK):
        raise DamtError(f"unknown dtype code {dtype}")
    if ndims != 2:
        raise DamtError(f"unsupported rank {ndims} (rank-2 tensors only)")
    end = 7 + 4 * ndims
    if len(buf) < end:
        raise DamtError("truncated dims")
    dims = struct.unpack_from(f"<{ndims}I", buf, 7)
    rows, cols = dims
    if rows < 1 or cols < 1:
        raise DamtError(f"bad dims {dims}")
    payload = buf[end:]
    if dtype == DTYPE_F32:
        want = rows * cols * 4
        if len(payload) != want:
            raise DamtError(f"payload length {len(payload)}, expected {want}")
        data = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
        return DenseMap(data)
    want = _packed_size(rows, cols)
    if len(payload) != want:
        raise DamtError(f"payload length {len(payload)}, expected {want}")
    mask = BitMask(rows, cols, np.frombuffer(payload, dtype=np.uint8))
    tail = (rows * cols) % 8
    if tail and (payload[-1] >> tail):
        raise DamtError("nonzero padding bits in final byte")
    return mask


def write_tensor(path: str | os.PathLike, t: DenseMap | BitMask) -> None:
    try:
        Path(path).write_bytes(tensor_bytes(t))
    except OSError as e:
        raise OSError(f"cannot write tensor to {path}: {e}") from e


def read_tensor(path: str | os.PathLike) -> DenseMap | BitMask:
    try:
        buf = Path(path).read_bytes()
    except OSError as e:
        raise OSError(f"cannot read tensor from {path}: {e}") from e
    try:
        return tensor_from_bytes(buf)
    except DamtError as e:
        raise DamtError(f"{path}: {e}") from None
