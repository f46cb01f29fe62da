"""Randomized finite-difference gradient checks for every primitive op."""

import numpy as np
import pytest

from helpers import fd_check, rand64

from marlkit.numerics import (
    Tensor,
    absval,
    add,
    affine,
    concat,
    elu,
    exp,
    gather,
    gru_step,
    huber,
    huber_raw,
    log,
    log_softmax,
    masked_mean,
    matmul,
    mse,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
    slice_axis,
    softmax,
    sub,
    tanh,
    tmax,
    tmean,
    tsum,
)

TRIALS = 10  # instantiations per op; each checks several coordinates


def _weighted(fn, out_shape, rng):
    """Wrap an op output in a random linear functional so every output
    coordinate contributes a distinct gradient."""
    w = rng.normal(size=out_shape)

    def loss(out):
        return tsum(mul(out, Tensor(w)))

    return loss


@pytest.mark.parametrize("trial", range(TRIALS))
def test_binary_ops(trial):
    rng = np.random.default_rng(100 + trial)
    a = Tensor(rand64(rng, 3, 4), requires_grad=True)
    b = Tensor(rand64(rng, 3, 4), requires_grad=True)
    bias = Tensor(rand64(rng, 4), requires_grad=True)
    m = Tensor(rand64(rng, 4, 5), requires_grad=True)
    fbias = Tensor(rand64(rng, 5), requires_grad=True)
    w34 = Tensor(rng.normal(size=(3, 4)))
    w35 = Tensor(rng.normal(size=(3, 5)))
    cases = [
        (lambda: tsum(mul(add(a, b), w34)), [a, b]),
        (lambda: tsum(mul(sub(a, b), w34)), [a, b]),
        (lambda: tsum(mul(mul(a, b), w34)), [a, b]),
        (lambda: tsum(mul(add(a, bias), w34)), [a, bias]),
        (lambda: tsum(mul(matmul(a, m), w35)), [a, m]),
        (lambda: tsum(mul(affine(a, m, fbias), w35)), [a, m, fbias]),
        (lambda: tsum(mul(scale(a, -2.5), w34)), [a]),
    ]
    for make_loss, params in cases:
        fd_check(make_loss, params, rng)


@pytest.mark.parametrize("trial", range(TRIALS))
def test_unary_ops(trial):
    rng = np.random.default_rng(200 + trial)
    w = rng.normal(size=(3, 4))
    x = Tensor(rand64(rng, 3, 4, avoid_zero=1e-3), requires_grad=True)
    pos = Tensor(rand64(rng, 3, 4, lo=0.1, hi=2.0), requires_grad=True)
    for op, t in [
        (tanh, x),
        (sigmoid, x),
        (elu, x),
        (relu, x),
        (exp, x),
        (absval, x),
        (log, pos),
    ]:
        fd_check(lambda op=op, t=t: tsum(mul(op(t), Tensor(w))), [t], rng)


@pytest.mark.parametrize("trial", range(TRIALS))
def test_softmax_family(trial):
    rng = np.random.default_rng(300 + trial)
    x = Tensor(rand64(rng, 4, 6), requires_grad=True)
    w = rng.normal(size=(4, 6))
    fd_check(lambda: tsum(mul(softmax(x), Tensor(w))), [x], rng)
    fd_check(lambda: tsum(mul(log_softmax(x), Tensor(w))), [x], rng)


@pytest.mark.parametrize("trial", range(TRIALS))
def test_shape_ops(trial):
    rng = np.random.default_rng(400 + trial)
    a = Tensor(rand64(rng, 3, 4), requires_grad=True)
    b = Tensor(rand64(rng, 3, 2), requires_grad=True)
    w = rng.normal(size=(3, 6))
    fd_check(lambda: tsum(mul(concat([a, b], axis=1), Tensor(w))), [a, b], rng)
    w2 = rng.normal(size=(3, 2))
    fd_check(lambda: tsum(mul(slice_axis(a, 1, 3, axis=1), Tensor(w2))), [a], rng)
    w3 = rng.normal(size=12)
    fd_check(lambda: tsum(mul(reshape(a, (12,)), Tensor(w3))), [a], rng)


@pytest.mark.parametrize("trial", range(TRIALS))
def test_reductions(trial):
    rng = np.random.default_rng(500 + trial)
    x = Tensor(rand64(rng, 3, 5), requires_grad=True)
    w = rng.normal(size=3)
    fd_check(lambda: tsum(x), [x], rng)
    fd_check(lambda: tmean(x), [x], rng)
    fd_check(lambda: tsum(mul(tsum(x, axis=1), Tensor(w))), [x], rng)
    fd_check(lambda: tsum(mul(tmean(x, axis=1), Tensor(w))), [x], rng)
    fd_check(lambda: tsum(mul(tmax(x, axis=1), Tensor(w))), [x], rng)


@pytest.mark.parametrize("trial", range(TRIALS))
def test_selection_and_losses(trial):
    rng = np.random.default_rng(600 + trial)
    x = Tensor(rand64(rng, 5, 4), requires_grad=True)
    idx = rng.integers(0, 4, size=5)
    w = rng.normal(size=5)
    fd_check(lambda: tsum(mul(gather(x, idx), Tensor(w))), [x], rng)

    pred = Tensor(rand64(rng, 6), requires_grad=True)
    target = rand64(rng, 6) + 3.0  # keep |pred - target| away from the huber kink
    fd_check(lambda: mse(pred, target.astype(np.float64)), [pred], rng)
    fd_check(lambda: huber(pred, target.astype(np.float64)), [pred], rng)
    mask = (rng.random(6) < 0.7).astype(np.float64)
    if mask.sum() == 0:
        mask[0] = 1.0
    fd_check(lambda: masked_mean(huber_raw(pred, target.astype(np.float64)), mask), [pred], rng)

    near = Tensor(rand64(rng, 6, lo=-0.4, hi=0.4), requires_grad=True)
    fd_check(lambda: huber(near, np.zeros(6)), [near], rng)


@pytest.mark.parametrize("trial", range(TRIALS))
def test_gru_step_primitive(trial):
    rng = np.random.default_rng(700 + trial)
    din, H, B = 3, 4, 2
    x = Tensor(rand64(rng, B, din), requires_grad=True)
    h = Tensor(rand64(rng, B, H), requires_grad=True)
    wx = Tensor(rng.normal(scale=0.5, size=(din, 3 * H)), requires_grad=True)
    wh = Tensor(rng.normal(scale=0.5, size=(H, 3 * H)), requires_grad=True)
    b = Tensor(rng.normal(scale=0.5, size=3 * H), requires_grad=True)
    w = rng.normal(size=(B, H))
    fd_check(lambda: tsum(mul(gru_step(x, h, wx, wh, b), Tensor(w))), [x, h, wx, wh, b], rng)
