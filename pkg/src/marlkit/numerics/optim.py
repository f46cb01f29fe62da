"""Optimizers, gradient clipping, target-network updates, exploration schedule."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class NonFiniteGradient(RuntimeError):
    pass


def _check_finite(grads: list[np.ndarray]) -> None:
    for g in grads:
        if not np.isfinite(g).all():
            raise NonFiniteGradient("non-finite gradient encountered")


class Adam:
    def __init__(self, params: list[Tensor], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        _check_finite(grads)
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= (self.lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)

    def state(self) -> dict:
        return {"t": self.t, "m": [m.copy() for m in self.m], "v": [v.copy() for v in self.v]}

    def load_state(self, state: dict) -> None:
        self.t = int(state["t"])
        for dst, src in zip(self.m, state["m"]):
            np.copyto(dst, src)
        for dst, src in zip(self.v, state["v"]):
            np.copyto(dst, src)


class RMSProp:
    """Non-centered RMSProp with momentum (decay 0.99, eps 1e-8 defaults)."""

    def __init__(self, params: list[Tensor], lr: float, momentum: float = 0.0, decay: float = 0.99, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.decay = decay
        self.eps = eps
        self.acc = [np.zeros_like(p.data) for p in params]
        self.buf = [np.zeros_like(p.data) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        _check_finite(grads)
        for p, g, acc, buf in zip(self.params, grads, self.acc, self.buf):
            acc *= self.decay
            acc += (1.0 - self.decay) * g * g
            buf *= self.momentum
            buf += self.lr * g / (np.sqrt(acc) + self.eps)
            p.data -= buf

    def state(self) -> dict:
        return {"acc": [a.copy() for a in self.acc], "buf": [b.copy() for b in self.buf]}

    def load_state(self, state: dict) -> None:
        for dst, src in zip(self.acc, state["acc"]):
            np.copyto(dst, src)
        for dst, src in zip(self.buf, state["buf"]):
            np.copyto(dst, src)


def make_optimizer(kind: str, params: list[Tensor], lr: float, momentum: float = 0.0):
    kind = kind.lower()
    if kind == "adam":
        return Adam(params, lr)
    if kind == "rmsprop":
        return RMSProp(params, lr, momentum=momentum)
    raise ValueError(f"unknown optimizer kind: {kind!r}")


def clip_global_norm(grads: list[np.ndarray], max_norm: float) -> list[np.ndarray]:
    """Scale all grads by max_norm/g when the global L2 norm g exceeds max_norm."""
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    total = 0.0
    for g in grads:
        total += float(np.sum(g.astype(np.float64) ** 2))
    norm = np.sqrt(total)
    if norm <= max_norm or norm == 0.0:
        return grads
    factor = np.float32(max_norm / norm)
    return [g * factor for g in grads]


def polyak_update(target_params: list[Tensor], online_params: list[Tensor], tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, elementwise in place."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must be in (0, 1]")
    for t, o in zip(target_params, online_params):
        if t.data.shape != o.data.shape:
            raise ValueError(f"shape mismatch in polyak update: {t.data.shape} vs {o.data.shape}")
        t.data *= 1.0 - tau
        t.data += tau * o.data


def hard_update(target_params: list[Tensor], online_params: list[Tensor]) -> None:
    for t, o in zip(target_params, online_params):
        np.copyto(t.data, o.data)


def epsilon_schedule(step: int, decay: float, min_eps: float) -> float:
    """Linear decay from 1.0 with a floor: eps = max(min_eps, 1 - step * decay)."""
    if decay <= 0:
        raise ValueError("decay must be positive")
    return max(min_eps, 1.0 - step * decay)
