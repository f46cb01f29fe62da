"""Dense tensors with reverse-mode differentiation on an explicit tape.

Tensors wrap contiguous numpy arrays (float32 by default, float64 supported
for high-precision gradient checks). Primitive ops record themselves on the
innermost active Tape; with no tape active they are plain forward computations,
which is the fast path used by executors at action-selection time.
"""

from __future__ import annotations

import numpy as np

_TAPE_STACK: list["Tape"] = []


def _active_tape() -> "Tape | None":
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tensor:
    """A dense n-dimensional array, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if dtype is None and arr.dtype not in (np.float32, np.float64):
            # default to float32 but leave float64 computations alone
            arr = arr.astype(np.float32)
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


class _Node:
    __slots__ = ("out_id", "inputs", "bwd")

    def __init__(self, out_id, inputs, bwd):
        self.out_id = out_id
        self.inputs = inputs
        self.bwd = bwd


class Tape:
    """Ordered record of primitive ops; replayed in reverse for gradients.

    Nodes are appended in forward execution order, so iterating the list in
    reverse is a reverse topological order and each node is visited exactly
    once.
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc):
        popped = _TAPE_STACK.pop()
        assert popped is self
        return False

    def record(self, out: Tensor, inputs: tuple, bwd) -> None:
        self.nodes.append(_Node(id(out), inputs, bwd))

    def gradients(self, loss: Tensor, params) -> list[np.ndarray]:
        """Backpropagate from scalar `loss`; return grads aligned with `params`."""
        if loss.data.size != 1:
            raise ValueError(f"loss must be scalar, got shape {loss.data.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            g = grads.pop(node.out_id, None)
            if g is None:
                continue
            node.bwd(g, grads)
        return [
            grads.get(id(p), np.zeros_like(p.data)) if isinstance(p, Tensor) else None
            for p in params
        ]


def _as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else np.float32
    return Tensor(np.asarray(x, dtype=dtype))


def _accumulate(grads: dict, t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    key = id(t)
    existing = grads.get(key)
    if existing is None:
        grads[key] = g.astype(t.data.dtype, copy=True)
    else:
        existing += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum-reduce grad `g` back to `shape` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _record(out: Tensor, inputs: tuple, bwd) -> Tensor:
    tape = _active_tape()
    if tape is not None and any(t.requires_grad for t in inputs if isinstance(t, Tensor)):
        out.requires_grad = True
        tape.record(out, inputs, bwd)
    return out


class ShapeError(ValueError):
    pass


def _check_matmul(a: Tensor, b: Tensor) -> None:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.data.shape} @ {b.data.shape}")


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _check_matmul(a, b)
    out = Tensor(a.data @ b.data)

    def bwd(g, grads):
        if a.requires_grad:
            _accumulate(grads, a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(grads, b, a.data.T @ g)

    return _record(out, (a, b), bwd)


def add(a: Tensor, b) -> Tensor:
    b = _as_tensor(b, a)
    out = Tensor(a.data + b.data)

    def bwd(g, grads):
        _accumulate(grads, a, _unbroadcast(g, a.data.shape))
        _accumulate(grads, b, _unbroadcast(g, b.data.shape))

    return _record(out, (a, b), bwd)


def sub(a: Tensor, b) -> Tensor:
    b = _as_tensor(b, a)
    out = Tensor(a.data - b.data)

    def bwd(g, grads):
        _accumulate(grads, a, _unbroadcast(g, a.data.shape))
        _accumulate(grads, b, _unbroadcast(-g, b.data.shape))

    return _record(out, (a, b), bwd)


def mul(a: Tensor, b) -> Tensor:
    b = _as_tensor(b, a)
    out = Tensor(a.data * b.data)

    def bwd(g, grads):
        _accumulate(grads, a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(grads, b, _unbroadcast(g * a.data, b.data.shape))

    return _record(out, (a, b), bwd)


def scale(a: Tensor, s: float) -> Tensor:
    out = Tensor(a.data * a.data.dtype.type(s))

    def bwd(g, grads):
        _accumulate(grads, a, g * s)

    return _record(out, (a,), bwd)


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Fused x @ w + b; single tape node to keep graphs small."""
    _check_matmul(x, w)
    out = Tensor(x.data @ w.data + b.data)

    def bwd(g, grads):
        if x.requires_grad:
            _accumulate(grads, x, g @ w.data.T)
        if w.requires_grad:
            _accumulate(grads, w, x.data.T @ g)
        if b.requires_grad:
            _accumulate(grads, b, g.sum(axis=0))

    return _record(out, (x, w, b), bwd)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g, grads):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                _accumulate(grads, t, g[tuple(idx)])

    return _record(out, tuple(tensors), bwd)


def slice_axis(a: Tensor, start: int, stop: int, axis: int = -1) -> Tensor:
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    out = Tensor(a.data[idx].copy())

    def bwd(g, grads):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[idx] = g
            _accumulate(grads, a, full)

    return _record(out, (a,), bwd)


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape))

    def bwd(g, grads):
        _accumulate(grads, a, g.reshape(a.data.shape))

    return _record(out, (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y)

    def bwd(g, grads):
        _accumulate(grads, a, g * (1.0 - y * y))

    return _record(out, (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    y = _sigmoid_np(a.data)
    out = Tensor(y)

    def bwd(g, grads):
        _accumulate(grads, a, g * y * (1.0 - y))

    return _record(out, (a,), bwd)


def _sigmoid_np(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(a: Tensor) -> Tensor:
    y = np.maximum(a.data, 0)
    out = Tensor(y)

    def bwd(g, grads):
        _accumulate(grads, a, g * (a.data > 0))

    return _record(out, (a,), bwd)


def elu(a: Tensor) -> Tensor:
    neg = a.data < 0
    y = np.where(neg, np.expm1(a.data), a.data)
    out = Tensor(y.astype(a.data.dtype))

    def bwd(g, grads):
        d = np.where(neg, y + 1.0, 1.0)
        _accumulate(grads, a, g * d)

    return _record(out, (a,), bwd)


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)
    out = Tensor(y)

    def bwd(g, grads):
        _accumulate(grads, a, g * y)

    return _record(out, (a,), bwd)


def log(a: Tensor) -> Tensor:
    out = Tensor(np.log(a.data))

    def bwd(g, grads):
        _accumulate(grads, a, g / a.data)

    return _record(out, (a,), bwd)


def absval(a: Tensor) -> Tensor:
    out = Tensor(np.abs(a.data))

    def bwd(g, grads):
        _accumulate(grads, a, g * np.sign(a.data))

    return _record(out, (a,), bwd)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y)

    def bwd(g, grads):
        dot = (g * y).sum(axis=axis, keepdims=True)
        _accumulate(grads, a, y * (g - dot))

    return _record(out, (a,), bwd)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    z = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    y = z - lse
    out = Tensor(y)

    def bwd(g, grads):
        sm = np.exp(y)
        _accumulate(grads, a, g - sm * g.sum(axis=axis, keepdims=True))

    return _record(out, (a,), bwd)


def tsum(a: Tensor, axis: int | None = None) -> Tensor:
    out = Tensor(a.data.sum(axis=axis))

    def bwd(g, grads):
        if axis is None:
            _accumulate(grads, a, np.broadcast_to(g, a.data.shape).copy())
        else:
            _accumulate(grads, a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())

    return _record(out, (a,), bwd)


def tmean(a: Tensor, axis: int | None = None) -> Tensor:
    out = Tensor(a.data.mean(axis=axis))
    n = a.data.size if axis is None else a.data.shape[axis]

    def bwd(g, grads):
        if axis is None:
            _accumulate(grads, a, np.broadcast_to(g / n, a.data.shape).copy())
        else:
            _accumulate(grads, a, np.broadcast_to(np.expand_dims(g, axis) / n, a.data.shape).copy())

    return _record(out, (a,), bwd)


def tmax(a: Tensor, axis: int = -1) -> Tensor:
    """Reduce max along axis; gradient routes to the first argmax."""
    idx = a.data.argmax(axis=axis)
    out = Tensor(a.data.max(axis=axis))

    def bwd(g, grads):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.put_along_axis(full, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
            _accumulate(grads, a, full)

    return _record(out, (a,), bwd)


def gather(a: Tensor, index: np.ndarray) -> Tensor:
    """Row-wise selection: out[i] = a[i, index[i]] for a 2-D tensor."""
    if a.data.ndim != 2:
        raise ShapeError(f"gather expects a 2-D tensor, got {a.data.shape}")
    index = np.asarray(index, dtype=np.int64)
    rows = np.arange(a.data.shape[0])
    out = Tensor(a.data[rows, index])

    def bwd(g, grads):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, (rows, index), g)
            _accumulate(grads, a, full)

    return _record(out, (a,), bwd)


def mse(pred: Tensor, target) -> Tensor:
    target = _as_tensor(target, pred)
    diff = pred.data - target.data
    out = Tensor(np.mean(diff * diff))
    n = diff.size

    def bwd(g, grads):
        gd = (2.0 / n) * diff * g
        _accumulate(grads, pred, gd)
        _accumulate(grads, target, -gd)

    return _record(out, (pred, target), bwd)


def huber_raw(pred: Tensor, target, delta: float = 1.0) -> Tensor:
    """Elementwise Huber loss, no reduction (for mask-weighted means)."""
    target = _as_tensor(target, pred)
    diff = pred.data - target.data
    absd = np.abs(diff)
    quad = absd <= delta
    out = Tensor(np.where(quad, 0.5 * diff * diff, delta * (absd - 0.5 * delta)).astype(pred.data.dtype))

    def bwd(g, grads):
        d = np.where(quad, diff, delta * np.sign(diff))
        _accumulate(grads, pred, g * d)
        _accumulate(grads, target, -g * d)

    return _record(out, (pred, target), bwd)


def huber(pred: Tensor, target, delta: float = 1.0) -> Tensor:
    target = _as_tensor(target, pred)
    diff = pred.data - target.data
    absd = np.abs(diff)
    quad = absd <= delta
    vals = np.where(quad, 0.5 * diff * diff, delta * (absd - 0.5 * delta))
    out = Tensor(np.mean(vals))
    n = diff.size

    def bwd(g, grads):
        d = np.where(quad, diff, delta * np.sign(diff))
        gd = (g / n) * d
        _accumulate(grads, pred, gd)
        _accumulate(grads, target, -gd)

    return _record(out, (pred, target), bwd)


def masked_mean(a: Tensor, mask: np.ndarray) -> Tensor:
    """Mean of `a` over entries where mask==1; zero-mask entries drop out."""
    m = np.asarray(mask, dtype=a.data.dtype)
    denom = max(float(m.sum()), 1.0)
    out = Tensor(np.asarray((a.data * m).sum() / denom, dtype=a.data.dtype))

    def bwd(g, grads):
        _accumulate(grads, a, g * m / denom)

    return _record(out, (a,), bwd)


def gru_step(x: Tensor, h: Tensor, wx: Tensor, wh: Tensor, b: Tensor) -> Tensor:
    """Single fused GRU update.

    Gate layout along the last axis of wx/wh/b is [update z | reset r | candidate c]:
        z = sigmoid(x Wxz + h Whz + bz)
        r = sigmoid(x Wxr + h Whr + br)
        c = tanh(x Wxc + (r*h) Whc + bc)
        h' = (1-z)*h + z*c
    The update gate scales the candidate, so all-zero weights give h' = h/2.
    """
    hdim = h.data.shape[-1]
    if wx.data.shape[1] != 3 * hdim or wh.data.shape != (hdim, 3 * hdim) or b.data.shape != (3 * hdim,):
        raise ShapeError(
            f"gru_step: weight shapes {wx.data.shape}/{wh.data.shape}/{b.data.shape} "
            f"do not match hidden size {hdim}"
        )
    gi = x.data @ wx.data + b.data
    gh_zr = h.data @ wh.data[:, : 2 * hdim]
    z = _sigmoid_np(gi[:, :hdim] + gh_zr[:, :hdim])
    r = _sigmoid_np(gi[:, hdim : 2 * hdim] + gh_zr[:, hdim:])
    rh = r * h.data
    c = np.tanh(gi[:, 2 * hdim :] + rh @ wh.data[:, 2 * hdim :])
    out = Tensor((1.0 - z) * h.data + z * c)

    def bwd(g, grads):
        dz = g * (c - h.data)
        dc = g * z
        dh = g * (1.0 - z)
        dc_pre = dc * (1.0 - c * c)
        drh = dc_pre @ wh.data[:, 2 * hdim :].T
        dr = drh * h.data
        dh = dh + drh * r
        dz_pre = dz * z * (1.0 - z)
        dr_pre = dr * r * (1.0 - r)
        dgi = np.concatenate([dz_pre, dr_pre, dc_pre], axis=1)
        if x.requires_grad:
            _accumulate(grads, x, dgi @ wx.data.T)
        if h.requires_grad:
            dh = dh + np.concatenate([dz_pre, dr_pre], axis=1) @ wh.data[:, : 2 * hdim].T
            _accumulate(grads, h, dh)
        if wx.requires_grad:
            _accumulate(grads, wx, x.data.T @ dgi)
        if wh.requires_grad:
            gwh = np.empty_like(wh.data)
            gwh[:, : 2 * hdim] = h.data.T @ np.concatenate([dz_pre, dr_pre], axis=1)
            gwh[:, 2 * hdim :] = rh.T @ dc_pre
            _accumulate(grads, wh, gwh)
        if b.requires_grad:
            _accumulate(grads, b, dgi.sum(axis=0))

    return _record(out, (x, h, wx, wh, b), bwd)
