"""Inter-agent information-flow topologies.

The architecture decides what a critic (or mixer) sees during training:
decentralised critics see only their own agent, centralised critics see all
agents, networked critics see the adjacency-true neighbourhood. Agent data
is always ordered lexicographically by agent id: all permitted observations
first, then all permitted actions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core.types import AgentID, ContinuousSpec, DiscreteSpec, EnvironmentSpec

KINDS = ("decentralised", "centralised", "networked")


@dataclass(frozen=True)
class ArchitectureKind:
    kind: str
    adjacency: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown architecture {self.kind!r}; expected one of {KINDS}")
        if self.kind == "networked":
            adj = np.asarray(self.adjacency, dtype=bool)
            if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
                raise ValueError("adjacency must be a square boolean matrix")
            if not np.array_equal(adj, adj.T):
                raise ValueError("adjacency must be symmetric")
            if not np.all(np.diag(adj)):
                raise ValueError("adjacency diagonal must be all true")
            object.__setattr__(self, "adjacency", adj)
        elif self.adjacency is not None:
            raise ValueError(f"{self.kind} architecture takes no adjacency")


def decentralised() -> ArchitectureKind:
    return ArchitectureKind("decentralised")


def centralised() -> ArchitectureKind:
    return ArchitectureKind("centralised")


def networked(adjacency) -> ArchitectureKind:
    return ArchitectureKind("networked", np.asarray(adjacency, dtype=bool))


def networked_from_edges(num_agents: int, edges: list[tuple[int, int]]) -> ArchitectureKind:
    adj = np.eye(num_agents, dtype=bool)
    for i, j in edges:
        adj[i, j] = adj[j, i] = True
    return networked(adj)


def action_dim(spec) -> int:
    """Width of an action when written into a critic input vector."""
    if isinstance(spec, DiscreteSpec):
        return spec.num_values  # one-hot
    if isinstance(spec, ContinuousSpec):
        return int(np.prod(spec.shape))
    raise TypeError(f"unknown action spec {spec!r}")


def encode_action(action, spec) -> np.ndarray:
    if isinstance(spec, DiscreteSpec):
        out = np.zeros(spec.num_values, dtype=np.float32)
        out[int(np.asarray(action))] = 1.0
        return out
    return np.asarray(action, dtype=np.float32).reshape(-1)


def permitted_agents(kind: ArchitectureKind, agent: AgentID, agent_ids: list[AgentID]) -> list[AgentID]:
    if kind.kind == "decentralised":
        return [agent]
    if kind.kind == "centralised":
        return list(agent_ids)
    idx = agent_ids.index(agent)
    return [a for j, a in enumerate(agent_ids) if kind.adjacency[idx, j]]


def critic_input_dim(kind: ArchitectureKind, spec: EnvironmentSpec, agent: AgentID) -> int:
    agents = permitted_agents(kind, agent, spec.agent_ids)
    obs = sum(int(np.prod(spec.observations[a].shape)) for a in agents)
    act = sum(action_dim(spec.actions[a]) for a in agents)
    return obs + act


def assemble_critic_input(
    kind: ArchitectureKind,
    agent: AgentID,
    observations: dict[AgentID, np.ndarray],
    actions: dict[AgentID, np.ndarray],
    spec: EnvironmentSpec,
) -> np.ndarray:
    """Flat critic input for one agent: permitted obs blocks then action blocks."""
    agents = permitted_agents(kind, agent, spec.agent_ids)
    for a in agents:
        if a not in observations or a not in actions:
            raise KeyError(f"missing entry for agent {a!r}")
    parts = [np.asarray(observations[a], dtype=np.float32).reshape(-1) for a in agents]
    parts += [encode_action(actions[a], spec.actions[a]) for a in agents]
    return np.concatenate(parts)


def assemble_critic_batch(
    kind: ArchitectureKind,
    agent: AgentID,
    observations: dict[AgentID, np.ndarray],
    actions: dict[AgentID, np.ndarray],
    spec: EnvironmentSpec,
) -> np.ndarray:
    """Batched variant: dict values are (B, dim) arrays; actions already encoded."""
    agents = permitted_agents(kind, agent, spec.agent_ids)
    parts = [observations[a] for a in agents] + [actions[a] for a in agents]
    return np.concatenate(parts, axis=1)
