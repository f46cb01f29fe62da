"""Binary payload encoding shared across processes.

The base unit is a tensor map: named little-endian arrays. Replay items
(transitions, sequences) and metric rows are flattened into tensor maps with
slash-separated keys; each item carries a one-byte type tag.
"""

from __future__ import annotations

import struct

import numpy as np

from ..core.types import SequenceSample, Transition

_DTYPES = {0: "<f4", 1: "<f8", 2: "<i8"}
_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1, np.dtype("int64"): 2}

TAG_TRANSITION = 0
TAG_SEQUENCE = 1
TAG_METRICS = 2


def encode_tensor_map(d: dict[str, np.ndarray]) -> bytes:
    parts = [struct.pack("<I", len(d))]
    for key in sorted(d):
        arr = np.asarray(d[key])
        if arr.dtype not in _DTYPE_CODES:
            arr = arr.astype(np.float32)
        code = _DTYPE_CODES[arr.dtype]
        arr = np.ascontiguousarray(arr, dtype=_DTYPES[code])
        raw = key.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<BB", code, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def decode_tensor_map(buf: bytes, offset: int = 0) -> tuple[dict[str, np.ndarray], int]:
    (count,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (klen,) = struct.unpack_from("<H", buf, offset)
        offset += 2
        key = buf[offset : offset + klen].decode("utf-8")
        offset += klen
        code, ndim = struct.unpack_from("<BB", buf, offset)
        offset += 2
        shape = struct.unpack_from(f"<{ndim}I", buf, offset)
        offset += 4 * ndim
        dtype = np.dtype(_DTYPES[code])
        size = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(buf, dtype=dtype, count=size, offset=offset).reshape(shape).copy()
        offset += dtype.itemsize * size
        out[key] = arr
    return out, offset


def _transition_to_map(tr: Transition) -> dict[str, np.ndarray]:
    d: dict[str, np.ndarray] = {"discount": np.float32(tr.discount)}
    for a in sorted(tr.observations):
        d[f"obs/{a}"] = np.asarray(tr.observations[a], np.float32)
        d[f"next_obs/{a}"] = np.asarray(tr.next_observations[a], np.float32)
        d[f"rew/{a}"] = np.float32(tr.rewards[a])
        act = np.asarray(tr.actions[a])
        d[f"act/{a}"] = act.astype(np.int64) if act.dtype.kind in "iu" else act.astype(np.float32)
    for a, ex in tr.extras.items():
        for k, v in ex.items():
            d[f"extras/{a}/{k}"] = np.asarray(v, np.float32)
    if tr.state is not None:
        d["state"] = np.asarray(tr.state, np.float32)
        d["next_state"] = np.asarray(tr.next_state, np.float32)
    return d


def _transition_from_map(d: dict[str, np.ndarray]) -> Transition:
    agents = sorted(k.split("/", 1)[1] for k in d if k.startswith("obs/"))
    extras: dict[str, dict[str, np.ndarray]] = {}
    for key, v in d.items():
        if key.startswith("extras/"):
            _, agent, name = key.split("/", 2)
            extras.setdefault(agent, {})[name] = v
    return Transition(
        observations={a: d[f"obs/{a}"] for a in agents},
        actions={a: d[f"act/{a}"] for a in agents},
        rewards={a: float(d[f"rew/{a}"]) for a in agents},
        next_observations={a: d[f"next_obs/{a}"] for a in agents},
        discount=float(d["discount"]),
        extras=extras,
        state=d.get("state"),
        next_state=d.get("next_state"),
    )


def encode_item(item) -> bytes:
    if isinstance(item, Transition):
        return bytes([TAG_TRANSITION]) + encode_tensor_map(_transition_to_map(item))
    if isinstance(item, SequenceSample):
        parts = [bytes([TAG_SEQUENCE]), struct.pack("<I", len(item.steps))]
        parts.append(encode_tensor_map({"mask": item.mask.astype(np.float32)}))
        for tr in item.steps:
            parts.append(encode_tensor_map(_transition_to_map(tr)))
        return b"".join(parts)
    if isinstance(item, dict):  # metric row: scalar map
        return bytes([TAG_METRICS]) + encode_tensor_map(
            {k: np.float64(v) for k, v in item.items() if v is not None}
        )
    raise TypeError(f"cannot encode item of type {type(item).__name__}")


def decode_item(buf: bytes):
    tag = buf[0]
    if tag == TAG_TRANSITION:
        d, _ = decode_tensor_map(buf, 1)
        return _transition_from_map(d)
    if tag == TAG_SEQUENCE:
        (count,) = struct.unpack_from("<I", buf, 1)
        offset = 5
        head, offset = decode_tensor_map(buf, offset)
        steps = []
        for _ in range(count):
            d, offset = decode_tensor_map(buf, offset)
            steps.append(_transition_from_map(d))
        return SequenceSample(steps, head["mask"])
    if tag == TAG_METRICS:
        d, _ = decode_tensor_map(buf, 1)
        return {k: float(v) for k, v in d.items()}
    raise ValueError(f"unknown item tag {tag}")
