"""Per-agent network containers for the baseline systems."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..architectures import ArchitectureKind, critic_input_dim
from ..core.types import AgentID, ContinuousSpec, DiscreteSpec, EnvironmentSpec
from ..numerics import GRUCell, MLP, Module, Tensor, scale, tanh
from ..numerics.tensor import add, mul


class QNetwork(Module):
    def __init__(self, input_dim: int, num_actions: int, sizes: list[int], rng, prefix: str = ""):
        super().__init__()
        self.num_actions = num_actions
        self.mlp = MLP(input_dim, sizes, num_actions, rng, prefix=prefix)
        self._params = self.mlp._params

    def __call__(self, obs: Tensor) -> Tensor:
        return self.mlp(obs)


class RecurrentQNetwork(Module):
    """Trunk MLP -> GRU core -> value head (+ optional message head)."""

    def __init__(
        self,
        input_dim: int,
        num_actions: int,
        rng,
        trunk_sizes: list[int],
        gru_size: int,
        head_size: int,
        channel_size: int = 0,
        prefix: str = "",
    ):
        super().__init__()
        self.num_actions = num_actions
        self.channel_size = channel_size
        self.trunk = MLP(
            input_dim, trunk_sizes[:-1], trunk_sizes[-1], rng, activate_final=True, prefix=f"{prefix}trunk/"
        )
        self.gru = GRUCell(trunk_sizes[-1], gru_size, rng, prefix=f"{prefix}")
        self.q_head = MLP(gru_size, [head_size], num_actions, rng, first_activation="elu", prefix=f"{prefix}q/")
        self.msg_head = None
        if channel_size:
            self.msg_head = MLP(
                gru_size, [head_size], channel_size, rng, first_activation="elu", prefix=f"{prefix}msg/"
            )
        for sub in filter(None, (self.trunk, self.gru, self.q_head, self.msg_head)):
            self._params.update(sub._params)

    def initial_state(self, batch: int = 1) -> Tensor:
        return self.gru.initial_state(batch)

    def step(self, obs: Tensor, h: Tensor) -> tuple[Tensor, Tensor | None, Tensor]:
        z = self.trunk(obs)
        h2 = self.gru(z, h)
        q = self.q_head(h2)
        msg = self.msg_head(h2) if self.msg_head is not None else None
        return q, msg, h2

    def message_parameters(self) -> list[Tensor]:
        return self.msg_head.param_tensors() if self.msg_head is not None else []


class PolicyNetwork(Module):
    """Deterministic policy with a tanh-bounded head scaled to action bounds."""

    def __init__(self, input_dim: int, action_spec: ContinuousSpec, sizes: list[int], rng, prefix: str = ""):
        super().__init__()
        self.action_spec = action_spec
        self.action_dim = int(np.prod(action_spec.shape))
        self.mlp = MLP(input_dim, sizes, self.action_dim, rng, output_scale=1e-3, prefix=prefix)
        self._params = self.mlp._params
        self._half_span = ((action_spec.high - action_spec.low) / 2.0).astype(np.float32)
        self._mid = ((action_spec.high + action_spec.low) / 2.0).astype(np.float32)

    def __call__(self, obs: Tensor) -> Tensor:
        raw = tanh(self.mlp(obs))
        return add(mul(raw, Tensor(self._half_span)), Tensor(self._mid))


class CriticNetwork(Module):
    """State-action value; scalar output, or a distribution over atoms."""

    def __init__(self, input_dim: int, sizes: list[int], rng, num_atoms: int = 1, prefix: str = ""):
        super().__init__()
        self.num_atoms = num_atoms
        self.mlp = MLP(input_dim, sizes, num_atoms, rng, prefix=prefix)
        self._params = self.mlp._params

    def __call__(self, x: Tensor) -> Tensor:
        return self.mlp(x)


class AgentNetworks:
    """Per-agent online and target networks, possibly referencing shared objects."""

    def __init__(
        self,
        policies: dict[AgentID, Module],
        target_policies: dict[AgentID, Module],
        critics: dict[AgentID, Module] | None = None,
        target_critics: dict[AgentID, Module] | None = None,
        weight_sharing: bool = True,
    ):
        self.policies = policies
        self.target_policies = target_policies
        self.critics = critics
        self.target_critics = target_critics
        self.weight_sharing = weight_sharing
        for targets, online in ((target_policies, policies), (target_critics, critics)):
            if targets:
                for agent, net in targets.items():
                    net.copy_from(online[agent])
                    net.set_trainable(False)

    @staticmethod
    def unique(nets: dict[AgentID, Module]) -> list[Module]:
        seen: dict[int, Module] = {}
        for agent in sorted(nets):
            seen.setdefault(id(nets[agent]), nets[agent])
        return list(seen.values())

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        """Online parameters, deduplicated, in a stable order (the wire layout)."""
        out: "OrderedDict[int, tuple[str, Tensor]]" = OrderedDict()
        for group in (self.policies, self.critics or {}):
            for agent in sorted(group):
                for name, t in group[agent].parameters():
                    if id(t) not in out:
                        out[id(t)] = (name, t)
        return list(out.values())


def build_networks(
    env_spec: EnvironmentSpec,
    kind: ArchitectureKind,
    algorithm: str,
    hyper: dict,
    rng: np.random.Generator,
    channel_size: int = 0,
) -> AgentNetworks:
    """Construct per-agent networks for a system.

    With weight sharing all agents reference the same network objects, which
    requires homogeneous observation/action specs.
    """
    agents = env_spec.agent_ids
    shared = bool(hyper.get("shared_weights", True))
    if shared:
        obs_dims = {int(np.prod(env_spec.observations[a].shape)) for a in agents}
        act_specs = {repr(env_spec.actions[a]) for a in agents}
        if len(obs_dims) > 1 or len(act_specs) > 1:
            raise ValueError("weight sharing requires homogeneous agent specs")

    def per_agent(factory):
        if shared:
            net = factory(agents[0], "")
            return {a: net for a in agents}
        return {a: factory(a, f"{a}/") for a in agents}

    def obs_dim(agent):
        return int(np.prod(env_spec.observations[agent].shape))

    if algorithm in ("madqn_ff", "vdn", "qmix"):
        sizes = list(hyper["network_sizes"])

        def make_q(agent, pfx):
            return QNetwork(obs_dim(agent), env_spec.actions[agent].num_values, sizes, rng, prefix=f"q/{pfx}")

        def make_q_t(agent, pfx):
            return QNetwork(obs_dim(agent), env_spec.actions[agent].num_values, sizes, rng, prefix=f"q/{pfx}")

        return AgentNetworks(per_agent(make_q), per_agent(make_q_t), weight_sharing=shared)

    if algorithm in ("madqn_rec", "dial"):
        trunk = list(hyper["recurrent_trunk_sizes"])
        gru_size = int(hyper["gru_size"])
        head = int(hyper["head_size"])

        def make_rec(agent, pfx):
            return RecurrentQNetwork(
                obs_dim(agent),
                env_spec.actions[agent].num_values,
                rng,
                trunk,
                gru_size,
                head,
                channel_size=channel_size,
                prefix=f"q/{pfx}",
            )

        return AgentNetworks(per_agent(make_rec), per_agent(make_rec), weight_sharing=shared)

    if algorithm in ("maddpg", "mad4pg"):
        for a in agents:
            if isinstance(env_spec.actions[a], DiscreteSpec):
                raise ValueError(f"{algorithm} requires continuous action specs")
        p_sizes = list(hyper["policy_sizes"])
        c_sizes = list(hyper["critic_sizes"])
        atoms = int(hyper.get("num_atoms", 1)) if algorithm == "mad4pg" else 1
        if shared and len({critic_input_dim(kind, env_spec, a) for a in agents}) > 1:
            raise ValueError("weight sharing requires identical critic input dims across agents")

        def make_pi(agent, pfx):
            return PolicyNetwork(obs_dim(agent), env_spec.actions[agent], p_sizes, rng, prefix=f"pi/{pfx}")

        def make_critic(agent, pfx):
            return CriticNetwork(
                critic_input_dim(kind, env_spec, agent), c_sizes, rng, num_atoms=atoms, prefix=f"critic/{pfx}"
            )

        return AgentNetworks(
            per_agent(make_pi),
            per_agent(make_pi),
            critics=per_agent(make_critic),
            target_critics=per_agent(make_critic),
            weight_sharing=shared,
        )

    raise ValueError(f"unknown algorithm {algorithm!r}")
