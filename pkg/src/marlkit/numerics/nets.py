"""Network building blocks: MLP and GRU cell with fan-in uniform init.

MLP activation schedule: tanh on the first hidden layer, ELU on every later
hidden layer, linear output.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .tensor import Tensor, affine, elu, gru_step, tanh


def uniform_init(rng: np.random.Generator, fan_in: int, shape, scale: float = 1.0) -> np.ndarray:
    bound = scale / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


class Module:
    """Base for parameterised blocks; parameters are named, ordered tensors."""

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()

    def _add_param(self, name: str, value: np.ndarray, trainable: bool = True) -> Tensor:
        t = Tensor(value, requires_grad=trainable)
        self._params[name] = t
        return t

    def parameters(self) -> list[tuple[str, Tensor]]:
        return list(self._params.items())

    def param_tensors(self) -> list[Tensor]:
        return [t for _, t in self._params.items()]

    def set_trainable(self, trainable: bool) -> None:
        for t in self._params.values():
            t.requires_grad = trainable

    def copy_from(self, other: "Module") -> None:
        for (name, dst), (oname, src) in zip(self._params.items(), other._params.items()):
            if name != oname or dst.data.shape != src.data.shape:
                raise ValueError(f"parameter mismatch: {name}{dst.data.shape} vs {oname}{src.data.shape}")
            np.copyto(dst.data, src.data)


class MLP(Module):
    """Fully connected stack: input -> hidden sizes -> output.

    `output_scale` shrinks the final layer's init, used for policy heads in
    continuous control. `activate_final` applies the schedule to the output
    layer too (for trunks feeding a recurrent core); `first_activation` is
    "elu" for blocks that sit deeper in a network.
    """

    def __init__(
        self,
        input_dim: int,
        hidden_sizes: list[int],
        output_dim: int,
        rng: np.random.Generator,
        output_scale: float = 1.0,
        activate_final: bool = False,
        first_activation: str = "tanh",
        prefix: str = "",
    ):
        super().__init__()
        self.input_dim = input_dim
        self.hidden_sizes = list(hidden_sizes)
        self.output_dim = output_dim
        self.activate_final = activate_final
        self.first_activation = first_activation
        self._layers: list[tuple[Tensor, Tensor]] = []
        dims = [input_dim] + self.hidden_sizes + [output_dim]
        for i, (din, dout) in enumerate(zip(dims[:-1], dims[1:])):
            scale = output_scale if i == len(dims) - 2 else 1.0
            w = self._add_param(f"{prefix}w{i}", uniform_init(rng, din, (din, dout), scale))
            b = self._add_param(f"{prefix}b{i}", uniform_init(rng, din, (dout,), scale))
            self._layers.append((w, b))

    def param_count(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def __call__(self, x: Tensor) -> Tensor:
        n_act = len(self._layers) if self.activate_final else len(self.hidden_sizes)
        for i, (w, b) in enumerate(self._layers):
            x = affine(x, w, b)
            if i < n_act:
                x = tanh(x) if i == 0 and self.first_activation == "tanh" else elu(x)
        return x


class GRUCell(Module):
    """Gated recurrent cell; see numerics.tensor.gru_step for the update rule."""

    def __init__(self, input_dim: int, hidden_size: int, rng: np.random.Generator, prefix: str = ""):
        super().__init__()
        self.input_dim = input_dim
        self.hidden_size = hidden_size
        self.wx = self._add_param(f"{prefix}gru_wx", uniform_init(rng, input_dim, (input_dim, 3 * hidden_size)))
        self.wh = self._add_param(f"{prefix}gru_wh", uniform_init(rng, hidden_size, (hidden_size, 3 * hidden_size)))
        self.b = self._add_param(f"{prefix}gru_b", uniform_init(rng, input_dim, (3 * hidden_size,)))

    def initial_state(self, batch: int = 1) -> Tensor:
        return Tensor(np.zeros((batch, self.hidden_size), dtype=np.float32))

    def __call__(self, x: Tensor, h: Tensor) -> Tensor:
        return gru_step(x, h, self.wx, self.wh, self.b)
