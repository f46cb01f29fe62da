"""Trainer checkpoints: parameters, optimizer state and counters round-trip
exactly through a single npz file."""

from __future__ import annotations

import os

import numpy as np

CHECKPOINT_VERSION = 1
FILENAME = "checkpoint.npz"


class CheckpointError(RuntimeError):
    pass


def _flatten_opt_state(state: dict) -> dict[str, np.ndarray]:
    out = {}
    for group, fields in state.items():
        for key, value in fields.items():
            if isinstance(value, list):
                for i, arr in enumerate(value):
                    out[f"opt/{group}/{key}/{i}"] = arr
            else:
                out[f"opt/{group}/{key}"] = np.asarray(value)
    return out


def _unflatten_opt_state(blobs: dict[str, np.ndarray]) -> dict:
    state: dict = {}
    for key, arr in blobs.items():
        parts = key.split("/")
        group, fname = parts[1], parts[2]
        g = state.setdefault(group, {})
        if len(parts) == 4:
            g.setdefault(fname, {})[int(parts[3])] = arr
        else:
            g[fname] = arr.item() if arr.ndim == 0 else arr
    for group in state.values():
        for fname, value in group.items():
            if isinstance(value, dict):
                group[fname] = [value[i] for i in sorted(value)]
    return state


def save_checkpoint(run_dir: str, trainer, filename: str = FILENAME) -> str:
    path = os.path.join(run_dir, filename)
    arrays: dict[str, np.ndarray] = {
        "meta/version": np.int64(CHECKPOINT_VERSION),
        "meta/trainer_steps": np.int64(trainer.trainer_steps),
    }
    for name, tensor in trainer.named_parameters():
        arrays[f"param/{name}"] = tensor.data
    arrays.update(_flatten_opt_state(trainer.optimizer_state()))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def restore_checkpoint(run_dir: str, trainer, filename: str = FILENAME) -> int:
    path = os.path.join(run_dir, filename)
    if not os.path.exists(path):
        raise CheckpointError(f"no checkpoint at {path}")
    data = np.load(path)
    if int(data["meta/version"]) != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint version {int(data['meta/version'])} != {CHECKPOINT_VERSION}")
    named = trainer.named_parameters()
    stored = {k[len("param/") :] for k in data.files if k.startswith("param/")}
    expected = {name for name, _ in named}
    if stored != expected:
        raise CheckpointError(
            f"parameter set mismatch: missing {sorted(expected - stored)[:3]}, "
            f"unexpected {sorted(stored - expected)[:3]}"
        )
    for name, tensor in named:
        arr = data[f"param/{name}"]
        if arr.shape != tensor.data.shape:
            raise CheckpointError(f"shape mismatch for {name}: {arr.shape} != {tensor.data.shape}")
        np.copyto(tensor.data, arr)
    opt_blobs = {k: data[k] for k in data.files if k.startswith("opt/")}
    if opt_blobs:
        trainer.load_optimizer_state(_unflatten_opt_state(opt_blobs))
    trainer.trainer_steps = int(data["meta/trainer_steps"])
    trainer.publish()
    return trainer.trainer_steps


def checkpoint_info(run_dir: str, filename: str = FILENAME) -> dict:
    path = os.path.join(run_dir, filename)
    if not os.path.exists(path):
        raise CheckpointError(f"no checkpoint at {path}")
    data = np.load(path)
    params = [k for k in data.files if k.startswith("param/")]
    return {
        "version": int(data["meta/version"]),
        "trainer_steps": int(data["meta/trainer_steps"]),
        "num_parameters": len(params),
        "total_values": int(sum(int(np.prod(data[k].shape)) for k in params)),
    }
