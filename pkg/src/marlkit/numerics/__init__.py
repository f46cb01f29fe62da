from .tensor import (
    ShapeError,
    Tape,
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
from .nets import GRUCell, MLP, Module, uniform_init
from .optim import (
    Adam,
    NonFiniteGradient,
    RMSProp,
    clip_global_norm,
    epsilon_schedule,
    hard_update,
    make_optimizer,
    polyak_update,
)
from .serialize import decode_params, encode_params, load_params

__all__ = [
    "Adam",
    "GRUCell",
    "MLP",
    "Module",
    "NonFiniteGradient",
    "RMSProp",
    "ShapeError",
    "Tape",
    "Tensor",
    "absval",
    "add",
    "affine",
    "clip_global_norm",
    "concat",
    "decode_params",
    "elu",
    "encode_params",
    "epsilon_schedule",
    "exp",
    "gather",
    "gru_step",
    "hard_update",
    "huber",
    "huber_raw",
    "load_params",
    "log",
    "log_softmax",
    "make_optimizer",
    "masked_mean",
    "matmul",
    "mse",
    "mul",
    "polyak_update",
    "relu",
    "reshape",
    "scale",
    "sigmoid",
    "slice_axis",
    "softmax",
    "sub",
    "tanh",
    "tmax",
    "tmean",
    "tsum",
    "uniform_init",
]
