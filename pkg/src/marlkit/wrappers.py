"""Architecture-wrapping modules: broadcast communication, replay
fingerprints, and additive/monotonic value mixing.

Wrappers are applied when a system is constructed. Communication gives every
policy a message head and every observation an incoming-message block (the
environment's own block when it routes messages natively, an appended block
otherwise). The fingerprint appends [epsilon, trainer_steps / 1e5] to every
observation so replayed samples carry their generation-time training phase.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core.types import AgentID, ArraySpec, EnvironmentSpec, MultiAgentTimeStep
from .numerics import MLP, Module, Tensor, absval, elu, mul, reshape, slice_axis, tsum
from .numerics.tensor import _sigmoid_np, add

FINGERPRINT_SCALE = 1e5


# ---------------------------------------------------------------------------
# communication
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BroadcastChannel:
    shared: bool = True
    channel_size: int = 1
    channel_noise: float = 0.0

    def __post_init__(self):
        if self.channel_size <= 0:
            raise ValueError("channel_size must be positive")
        if self.channel_noise < 0:
            raise ValueError("channel_noise must be non-negative")


def dru(m, mode: str, sigma: float = 0.0, rng: np.random.Generator | None = None):
    """Discretise/regularise unit: sigmoid(m + noise) in training, threshold in execution."""
    m = np.asarray(m, dtype=np.float32)
    if mode == "training":
        if sigma > 0:
            if rng is None:
                raise ValueError("training-mode dru with noise needs an rng")
            m = m + rng.normal(0.0, sigma, size=m.shape).astype(np.float32)
        return _sigmoid_np(m)
    if mode == "execution":
        return (m > 0).astype(np.float32)
    raise ValueError(f"unknown dru mode {mode!r}")


def dru_training_tensor(m: Tensor, sigma: float, rng: np.random.Generator | None) -> Tensor:
    """Differentiable training-mode DRU for use inside a tape."""
    from .numerics import sigmoid

    if sigma > 0:
        noise = rng.normal(0.0, sigma, size=m.data.shape).astype(m.data.dtype)
        m = add(m, Tensor(noise))
    return sigmoid(m)


@dataclass(frozen=True)
class CommunicationLayout:
    channel: BroadcastChannel
    native: bool  # environment routes messages and reserves obs slots itself
    num_agents: int
    # incoming-message block within each agent's network input, [start, stop)
    message_slice: tuple[int, int]

    @property
    def incoming_width(self) -> int:
        return (self.num_agents - 1) * self.channel.channel_size


def wrap_communication(
    spec: EnvironmentSpec, channel: BroadcastChannel, native_message_size: int = 0
) -> tuple[EnvironmentSpec, CommunicationLayout]:
    """Extend an environment spec with a broadcast channel.

    Native channels must match the configured width; otherwise each agent's
    observation grows by (N-1) * channel_size appended message inputs.
    """
    n = spec.num_agents
    if native_message_size:
        if native_message_size != channel.channel_size:
            raise ValueError(
                f"environment routes {native_message_size}-wide messages, channel wants {channel.channel_size}"
            )
        any_agent = spec.agent_ids[0]
        dim = int(np.prod(spec.observations[any_agent].shape))
        width = (n - 1) * channel.channel_size
        layout = CommunicationLayout(channel, True, n, (dim - width, dim))
        return spec, layout
    width = (n - 1) * channel.channel_size
    dims = {int(np.prod(s.shape)) for s in spec.observations.values()}
    if len(dims) != 1:
        raise ValueError("broadcast communication requires homogeneous observation shapes")
    base_dim = dims.pop()
    new_obs = {}
    for agent, ospec in spec.observations.items():
        new_obs[agent] = ArraySpec(
            (base_dim + width,),
            np.concatenate([ospec.low, np.zeros(width, np.float32)]),
            np.concatenate([ospec.high, np.ones(width, np.float32)]),
        )
    wrapped = EnvironmentSpec(observations=new_obs, actions=dict(spec.actions), global_state=spec.global_state)
    layout = CommunicationLayout(channel, False, n, (base_dim, base_dim + width))
    return wrapped, layout


def broadcast_incoming(
    agent: AgentID, agent_ids: list[AgentID], messages: dict[AgentID, np.ndarray]
) -> np.ndarray:
    """Concatenate other agents' messages in lexicographic order, self excluded."""
    parts = [np.asarray(messages[a], dtype=np.float32).reshape(-1) for a in sorted(agent_ids) if a != agent]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.float32)


# ---------------------------------------------------------------------------
# replay fingerprint
# ---------------------------------------------------------------------------


def fingerprint_vector(epsilon: float, trainer_steps: int) -> np.ndarray:
    if trainer_steps < 0:
        raise ValueError("trainer_steps must be non-negative")
    return np.array([epsilon, trainer_steps / FINGERPRINT_SCALE], dtype=np.float32)


def wrap_fingerprint(spec: EnvironmentSpec) -> EnvironmentSpec:
    """Grow every observation spec by the two fingerprint inputs."""
    new_obs = {}
    for agent, ospec in spec.observations.items():
        new_obs[agent] = ArraySpec(
            (int(np.prod(ospec.shape)) + 2,),
            np.concatenate([ospec.low, np.zeros(2, np.float32)]),
            np.concatenate([ospec.high, np.array([1.0, 1e3], np.float32)]),
        )
    return EnvironmentSpec(observations=new_obs, actions=dict(spec.actions), global_state=spec.global_state)


def apply_fingerprint(ts: MultiAgentTimeStep, epsilon: float, trainer_steps: int) -> MultiAgentTimeStep:
    fp = fingerprint_vector(epsilon, trainer_steps)
    return replace(
        ts,
        observations={a: np.concatenate([o, fp]) for a, o in ts.observations.items()},
    )


# ---------------------------------------------------------------------------
# value mixing
# ---------------------------------------------------------------------------


class AdditiveMixer:
    """VDN mixing: the joint value is the sum of per-agent values."""

    trainable = False

    def parameters(self):
        return []

    def param_tensors(self):
        return []

    def __call__(self, per_agent_q: Tensor, state=None) -> Tensor:
        return tsum(per_agent_q, axis=1)


class MonotonicMixer(Module):
    """QMIX mixing: two-layer network whose weights come from hypernetworks
    over the global state, made non-negative via absolute value so the joint
    value is monotone in every agent's value."""

    trainable = True

    def __init__(
        self,
        num_agents: int,
        state_dim: int,
        rng: np.random.Generator,
        embed_dim: int = 32,
        hyper_hidden: int = 32,
        prefix: str = "mixer/",
    ):
        super().__init__()
        self.num_agents = num_agents
        self.state_dim = state_dim
        self.embed_dim = embed_dim
        self.hyper_w1 = MLP(state_dim, [hyper_hidden], num_agents * embed_dim, rng, prefix=f"{prefix}w1/")
        self.hyper_b1 = MLP(state_dim, [hyper_hidden], embed_dim, rng, prefix=f"{prefix}b1/")
        self.hyper_w2 = MLP(state_dim, [hyper_hidden], embed_dim, rng, prefix=f"{prefix}w2/")
        self.hyper_b2 = MLP(state_dim, [hyper_hidden], 1, rng, prefix=f"{prefix}b2/")
        for sub in (self.hyper_w1, self.hyper_b1, self.hyper_w2, self.hyper_b2):
            self._params.update(sub._params)

    def __call__(self, per_agent_q: Tensor, state=None) -> Tensor:
        if state is None:
            raise ValueError("monotonic mixing requires a global state")
        if not isinstance(state, Tensor):
            state = Tensor(np.asarray(state, dtype=np.float32))
        w1 = absval(self.hyper_w1(state))  # (B, N*E)
        b1 = self.hyper_b1(state)  # (B, E)
        e = self.embed_dim
        hidden = b1
        for i in range(self.num_agents):
            qi = slice_axis(per_agent_q, i, i + 1)  # (B, 1)
            wi = slice_axis(w1, i * e, (i + 1) * e)  # (B, E)
            hidden = add(hidden, mul(qi, wi))
        hidden = elu(hidden)
        w2 = absval(self.hyper_w2(state))  # (B, E)
        b2 = self.hyper_b2(state)  # (B, 1)
        return add(tsum(mul(hidden, w2), axis=1), reshape(b2, (-1,)))


def make_mixer(kind: str, num_agents: int, state_dim: int | None, rng: np.random.Generator):
    kind = kind.lower()
    if kind == "additive":
        return AdditiveMixer()
    if kind == "monotonic":
        if state_dim is None:
            raise ValueError("monotonic mixing requires a global state spec")
        return MonotonicMixer(num_agents, state_dim, rng)
    raise ValueError(f"unknown mixer kind {kind!r}")
