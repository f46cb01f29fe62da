"""Single-step shared-reward matrix game; the oracle environment for mixing tests."""

from __future__ import annotations

import numpy as np

from ..core.types import (
    AgentID,
    ArraySpec,
    DiscreteSpec,
    EnvironmentSpec,
    MultiAgentTimeStep,
    StepType,
)


class MatrixGame:
    native_message_size = 0

    def __init__(self, payoff, seed: int = 0):
        self.payoff = np.asarray(payoff, dtype=np.float32)
        self.num_agents = self.payoff.ndim
        self.agents: list[AgentID] = [f"agent_{i}" for i in range(self.num_agents)]
        self._terminal = True
        del seed  # no stochasticity; accepted for interface uniformity

    def spec(self) -> EnvironmentSpec:
        return EnvironmentSpec(
            observations={a: ArraySpec.vector(1, 0.0, 1.0) for a in self.agents},
            actions={a: DiscreteSpec(self.payoff.shape[i]) for i, a in enumerate(self.agents)},
            global_state=ArraySpec.vector(1, 0.0, 1.0),
        )

    def _obs(self) -> dict[AgentID, np.ndarray]:
        return {a: np.ones(1, dtype=np.float32) for a in self.agents}

    def reset(self) -> MultiAgentTimeStep:
        self._terminal = False
        return MultiAgentTimeStep(
            step_type=StepType.FIRST,
            observations=self._obs(),
            rewards={a: 0.0 for a in self.agents},
            discount=1.0,
            state=np.ones(1, dtype=np.float32),
        )

    def step(self, actions: dict[AgentID, int], messages=None) -> MultiAgentTimeStep:
        if self._terminal:
            raise RuntimeError("step() called on a terminal episode; call reset()")
        joint = tuple(int(np.asarray(actions[a])) for a in self.agents)
        for i, a in enumerate(joint):
            if not 0 <= a < self.payoff.shape[i]:
                raise IndexError(f"action {a} out of range for agent {self.agents[i]}")
        reward = float(self.payoff[joint])
        self._terminal = True
        return MultiAgentTimeStep(
            step_type=StepType.LAST,
            observations=self._obs(),
            rewards={a: reward for a in self.agents},
            discount=0.0,
            state=np.ones(1, dtype=np.float32),
        )

    def optimal_joint_action(self) -> tuple[tuple[int, ...], float]:
        """Exhaustive enumeration oracle: best joint action and its payoff."""
        flat = int(np.argmax(self.payoff))
        joint = np.unravel_index(flat, self.payoff.shape)
        return tuple(int(j) for j in joint), float(self.payoff[joint])
