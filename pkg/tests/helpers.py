"""Shared test utilities: finite-difference gradient checking in float64."""

from __future__ import annotations

import numpy as np

from marlkit.numerics import Tape, Tensor


def to_float64(module) -> None:
    for _, p in module.parameters():
        p.data = p.data.astype(np.float64)


def fd_check(make_loss, params: list[Tensor], rng, coords: int = 6, h: float = 1e-6,
             tol: float = 1e-3) -> float:
    """Compare tape gradients with central finite differences.

    Samples `coords` coordinates per parameter; returns the max relative
    error and asserts it is below `tol`.
    """
    with Tape() as tape:
        loss = make_loss()
    grads = tape.gradients(loss, params)
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        n = min(coords, flat.size)
        idxs = rng.choice(flat.size, size=n, replace=False)
        for i in idxs:
            old = flat[i]
            flat[i] = old + h
            up = make_loss().item()
            flat[i] = old - h
            dn = make_loss().item()
            flat[i] = old
            fd = (up - dn) / (2 * h)
            an = gflat[i]
            if abs(an) < 1e-10 and abs(fd) < 1e-6:
                continue
            rel = abs(an - fd) / max(abs(an), abs(fd), 1e-8)
            worst = max(worst, rel)
            assert rel < tol, f"grad mismatch: analytic {an}, fd {fd}, rel {rel}"
    return worst


def directional_check(make_loss, params: list[Tensor], rng, directions: int = 8,
                      h: float = 1e-6, tol: float = 1e-3) -> float:
    """Directional-derivative check over all parameters jointly (for big nets)."""
    with Tape() as tape:
        loss = make_loss()
    grads = tape.gradients(loss, params)
    worst = 0.0
    for _ in range(directions):
        vs = [rng.normal(size=p.data.shape) for p in params]
        norm = np.sqrt(sum(float((v**2).sum()) for v in vs))
        vs = [v / norm for v in vs]
        analytic = sum(float((g * v).sum()) for g, v in zip(grads, vs))
        for p, v in zip(params, vs):
            p.data += h * v
        up = make_loss().item()
        for p, v in zip(params, vs):
            p.data -= 2 * h * v
        dn = make_loss().item()
        for p, v in zip(params, vs):
            p.data += h * v
        fd = (up - dn) / (2 * h)
        if abs(analytic) < 1e-10 and abs(fd) < 1e-6:
            continue
        rel = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-8)
        worst = max(worst, rel)
        assert rel < tol, f"directional grad mismatch: analytic {analytic}, fd {fd}, rel {rel}"
    return worst


def rand64(rng, *shape, lo=-1.0, hi=1.0, avoid_zero: float = 0.0) -> np.ndarray:
    x = rng.uniform(lo, hi, size=shape)
    if avoid_zero:
        x = np.where(np.abs(x) < avoid_zero, avoid_zero * np.sign(x) + (x == 0) * avoid_zero, x)
    return x
