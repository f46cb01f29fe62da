"""Parameter blob format: ordered (name, shape, little-endian float32 data)."""

from __future__ import annotations

import struct

import numpy as np

from .tensor import Tensor


def encode_params(named: list[tuple[str, Tensor]]) -> bytes:
    parts = [struct.pack("<I", len(named))]
    for name, tensor in named:
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(tensor.data, dtype="<f4")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def decode_params(blob: bytes) -> list[tuple[str, np.ndarray]]:
    offset = 0
    (count,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    out = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + nlen].decode("utf-8")
        offset += nlen
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(blob, dtype="<f4", count=size, offset=offset).reshape(shape).copy()
        offset += 4 * size
        out.append((name, arr))
    return out


def load_params(named: list[tuple[str, Tensor]], blob: bytes) -> None:
    decoded = decode_params(blob)
    if len(decoded) != len(named):
        raise ValueError(f"parameter count mismatch: blob has {len(decoded)}, expected {len(named)}")
    for (name, tensor), (bname, arr) in zip(named, decoded):
        if name != bname or tensor.data.shape != arr.shape:
            raise ValueError(f"parameter mismatch: {name}{tensor.data.shape} vs {bname}{arr.shape}")
        np.copyto(tensor.data, arr)
