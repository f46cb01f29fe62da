"""The switch riddle game.

One agent per day is placed in an interrogation room. Any in-room agent may
Tell (claim every agent has visited); the episode then ends with reward +1
for all agents when the claim is true, -1 otherwise. Running past the day
limit ends the episode with reward 0. The switch is carried by a broadcast
message channel: each agent's observation ends with one incoming bit per
other agent, filled from the messages passed to step().
"""

from __future__ import annotations

import numpy as np

from ..core.types import (
    AgentID,
    ArraySpec,
    DiscreteSpec,
    EnvironmentSpec,
    MultiAgentTimeStep,
    SpecViolationError,
    StepType,
)

NOOP = 0
TELL = 1


def switch_max_days(num_agents: int) -> int:
    return 4 * num_agents - 6 if num_agents >= 3 else 4


class SwitchGame:
    native_message_size = 1

    def __init__(self, num_agents: int = 3, seed: int = 0):
        if num_agents < 1:
            raise ValueError("need at least one agent")
        self.num_agents = num_agents
        self.agents: list[AgentID] = [f"agent_{i}" for i in range(num_agents)]
        self.max_days = switch_max_days(num_agents)
        self._rng = np.random.default_rng(seed)
        self._day = 0
        self._in_room: AgentID | None = None
        self._has_visited: set[AgentID] = set()
        self._terminal = True

    def spec(self) -> EnvironmentSpec:
        obs_dim = 2 + (self.num_agents - 1) * self.native_message_size
        return EnvironmentSpec(
            observations={a: ArraySpec.vector(obs_dim, 0.0, 1.0) for a in self.agents},
            actions={a: DiscreteSpec(2) for a in self.agents},
        )

    def message_slice(self, agent: AgentID) -> tuple[int, int]:
        """Positions of the incoming-message block within `agent`'s observation."""
        return 2, 2 + (self.num_agents - 1) * self.native_message_size

    def _observations(self, messages: dict[AgentID, np.ndarray] | None) -> dict[AgentID, np.ndarray]:
        day_norm = min(self._day, self.max_days) / self.max_days
        obs = {}
        for agent in self.agents:
            senders = [a for a in self.agents if a != agent]
            incoming = np.zeros(len(senders), dtype=np.float32)
            if messages:
                for i, sender in enumerate(senders):
                    if sender in messages:
                        incoming[i] = float(np.asarray(messages[sender]).reshape(-1)[0])
            obs[agent] = np.concatenate(
                [np.array([1.0 if agent == self._in_room else 0.0, day_norm], dtype=np.float32), incoming]
            )
        return obs

    def reset(self) -> MultiAgentTimeStep:
        self._day = 1
        self._in_room = self.agents[int(self._rng.integers(self.num_agents))]
        self._has_visited = {self._in_room}
        self._terminal = False
        return MultiAgentTimeStep(
            step_type=StepType.FIRST,
            observations=self._observations(None),
            rewards={a: 0.0 for a in self.agents},
            discount=1.0,
        )

    def step(self, actions: dict[AgentID, int], messages=None) -> MultiAgentTimeStep:
        if self._terminal:
            raise RuntimeError("step() called on a terminal episode; call reset()")
        for agent, action in actions.items():
            if int(np.asarray(action)) not in (NOOP, TELL):
                raise SpecViolationError(f"{agent}: switch action must be 0 (no-op) or 1 (tell)")
        # Tell only counts for the agent currently in the room.
        told = int(np.asarray(actions[self._in_room])) == TELL
        if told:
            self._terminal = True
            correct = self._has_visited == set(self.agents)
            reward = 1.0 if correct else -1.0
            self._in_room = None
            return MultiAgentTimeStep(
                step_type=StepType.LAST,
                observations=self._observations(messages),
                rewards={a: reward for a in self.agents},
                discount=0.0,
            )
        self._day += 1
        if self._day > self.max_days:
            self._terminal = True
            self._in_room = None
            return MultiAgentTimeStep(
                step_type=StepType.LAST,
                observations=self._observations(messages),
                rewards={a: 0.0 for a in self.agents},
                discount=0.0,
            )
        self._in_room = self.agents[int(self._rng.integers(self.num_agents))]
        self._has_visited.add(self._in_room)
        return MultiAgentTimeStep(
            step_type=StepType.MID,
            observations=self._observations(messages),
            rewards={a: 0.0 for a in self.agents},
            discount=1.0,
        )


def coverage_probability(num_agents: int, days: int) -> float:
    """Probability that `days` uniform room draws cover all agents (inclusion-exclusion)."""
    n = num_agents
    total = 0.0
    for k in range(n + 1):
        total += (-1) ** k * _comb(n, k) * ((n - k) / n) ** days
    return total


def _comb(n: int, k: int) -> float:
    from math import comb

    return float(comb(n, k))
