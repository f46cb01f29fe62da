"""Bounded replay tables with pluggable sampling disciplines.

A table is a shared service: insert and sample may be called concurrently
from several client threads, so every public method takes the table lock.
Sampling before min_size_to_sample raises NotReadyError, which callers treat
as a retriable signal rather than a failure.
"""

from __future__ import annotations

import threading

import numpy as np

SAMPLERS = ("uniform", "fifo", "lifo", "priority")


class NotReadyError(RuntimeError):
    """Table has too few items to serve this sample; retry later."""


class ReplayTable:
    def __init__(
        self,
        capacity: int = 100_000,
        sampler: str = "uniform",
        min_size_to_sample: int = 1,
        priority_exponent: float = 0.6,
        seed: int = 0,
    ):
        if sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {sampler!r}; expected one of {SAMPLERS}")
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.sampler = sampler
        self.min_size_to_sample = min_size_to_sample
        self.priority_exponent = priority_exponent
        self.insert_count = 0
        self.sample_count = 0
        self._rng = np.random.default_rng(seed)
        self._lock = threading.Lock()
        self._items: list = []
        self._priorities: list[float] = []
        self._ids: list[int] = []
        self._start = 0  # virtual head; entries before it are evicted
        self._next_id = 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._items) - self._start

    @property
    def size(self) -> int:
        return len(self)

    def info(self) -> dict:
        with self._lock:
            return {
                "size": len(self._items) - self._start,
                "capacity": self.capacity,
                "sampler": self.sampler,
                "insert_count": self.insert_count,
                "sample_count": self.sample_count,
                "min_size_to_sample": self.min_size_to_sample,
            }

    def insert(self, item, priority: float = 1.0) -> int:
        if self.sampler == "priority" and priority <= 0:
            raise ValueError("priority must be positive for priority tables")
        with self._lock:
            item_id = self._next_id
            self._next_id += 1
            self._items.append(item)
            self._priorities.append(float(priority))
            self._ids.append(item_id)
            self.insert_count += 1
            if len(self._items) - self._start > self.capacity:
                self._start += 1  # evict oldest
            self._maybe_compact()
            return item_id

    def _maybe_compact(self) -> None:
        if self._start > self.capacity:
            self._items = self._items[self._start :]
            self._priorities = self._priorities[self._start :]
            self._ids = self._ids[self._start :]
            self._start = 0

    def update_priority(self, item_id: int, priority: float) -> bool:
        if priority <= 0:
            raise ValueError("priority must be positive")
        with self._lock:
            lo = self._ids[self._start] if len(self._items) > self._start else None
            if lo is None or item_id < lo or item_id >= self._next_id:
                return False
            idx = self._start + (item_id - lo)
            self._priorities[idx] = float(priority)
            return True

    def sample(self, batch: int) -> list:
        with self._lock:
            size = len(self._items) - self._start
            if self.sampler in ("uniform", "priority"):
                needed = max(batch, self.min_size_to_sample)
            else:
                needed = batch
            if size < needed:
                raise NotReadyError(f"table has {size} items, needs {needed}")
            self.sample_count += batch
            if self.sampler == "uniform":
                idx = self._rng.integers(self._start, self._start + size, size=batch)
                return [self._items[i] for i in idx]
            if self.sampler == "priority":
                p = np.array(self._priorities[self._start :], dtype=np.float64) ** self.priority_exponent
                p /= p.sum()
                idx = self._rng.choice(size, size=batch, p=p)
                return [self._items[self._start + i] for i in idx]
            if self.sampler == "fifo":
                out = self._items[self._start : self._start + batch]
                self._start += batch
                self._maybe_compact()
                return out
            # lifo: remove and return newest first
            out = [self._items[-(i + 1)] for i in range(batch)]
            del self._items[-batch:]
            del self._priorities[-batch:]
            del self._ids[-batch:]
            return out
