"""Debugging spread: agents navigate to individually assigned landmarks.

Per-step reward for each agent is exp(-2 * distance to its landmark), which
is 1 on top of the landmark and decays towards 0, minus 1 for every other
agent it is currently colliding with (centre distance < 2 * radius).
Discrete mode moves a fixed step in one of four directions or stands still;
continuous mode integrates commanded acceleration with damped velocity.
"""

from __future__ import annotations

import numpy as np

from ..core.types import (
    AgentID,
    ArraySpec,
    ContinuousSpec,
    DiscreteSpec,
    EnvironmentSpec,
    MultiAgentTimeStep,
    SpecViolationError,
    StepType,
)

_DIRS = np.array([[-1, 0], [1, 0], [0, 1], [0, -1], [0, 0]], dtype=np.float32)  # left right up down stay

RADIUS = 0.1
DT = 0.1
DAMPING = 0.75
STEP_SIZE = 0.1
MAX_SPEED = 0.5


class DebugSpread:
    native_message_size = 0

    def __init__(self, num_agents: int = 3, mode: str = "discrete", max_steps: int = 50, seed: int = 0):
        if mode not in ("discrete", "continuous"):
            raise ValueError(f"unknown spread mode {mode!r}")
        self.num_agents = num_agents
        self.mode = mode
        self.max_steps = max_steps
        self.agents: list[AgentID] = [f"agent_{i}" for i in range(num_agents)]
        self._rng = np.random.default_rng(seed)
        self._pos = np.zeros((num_agents, 2), dtype=np.float32)
        self._vel = np.zeros((num_agents, 2), dtype=np.float32)
        self._landmarks = np.zeros((num_agents, 2), dtype=np.float32)
        self._assignment = np.arange(num_agents)
        self._steps = 0
        self._terminal = True

    def spec(self) -> EnvironmentSpec:
        n = self.num_agents
        low = np.concatenate([[-1, -1], [-MAX_SPEED] * 2, [-2, -2], [-2, -2] * (n - 1)]).astype(np.float32)
        high = np.concatenate([[1, 1], [MAX_SPEED] * 2, [2, 2], [2, 2] * (n - 1)]).astype(np.float32)
        obs = {a: ArraySpec((len(low),), low.copy(), high.copy()) for a in self.agents}
        if self.mode == "discrete":
            actions = {a: DiscreteSpec(5) for a in self.agents}
        else:
            actions = {
                a: ContinuousSpec((2,), np.full(2, -1.0, np.float32), np.full(2, 1.0, np.float32))
                for a in self.agents
            }
        state_low = np.concatenate([[-1] * 2 * n, [-MAX_SPEED] * 2 * n, [-1] * 2 * n]).astype(np.float32)
        state_high = np.concatenate([[1] * 2 * n, [MAX_SPEED] * 2 * n, [1] * 2 * n]).astype(np.float32)
        return EnvironmentSpec(
            observations=obs,
            actions=actions,
            global_state=ArraySpec((6 * n,), state_low, state_high),
        )

    def _observation(self, i: int) -> np.ndarray:
        own_lm = self._landmarks[self._assignment[i]]
        parts = [self._pos[i], self._vel[i], own_lm - self._pos[i]]
        for j in range(self.num_agents):
            if j != i:
                parts.append(self._pos[j] - self._pos[i])
        return np.concatenate(parts).astype(np.float32)

    def _global_state(self) -> np.ndarray:
        lms = self._landmarks[self._assignment]
        return np.concatenate([self._pos.ravel(), self._vel.ravel(), lms.ravel()]).astype(np.float32)

    def _timestep(self, step_type: StepType, rewards: dict[AgentID, float], discount: float) -> MultiAgentTimeStep:
        return MultiAgentTimeStep(
            step_type=step_type,
            observations={a: self._observation(i) for i, a in enumerate(self.agents)},
            rewards=rewards,
            discount=discount,
            state=self._global_state(),
        )

    def reset(self) -> MultiAgentTimeStep:
        n = self.num_agents
        self._pos = self._rng.uniform(-1, 1, size=(n, 2)).astype(np.float32)
        self._vel = np.zeros((n, 2), dtype=np.float32)
        self._landmarks = self._rng.uniform(-1, 1, size=(n, 2)).astype(np.float32)
        self._assignment = self._rng.permutation(n)
        self._steps = 0
        self._terminal = False
        return self._timestep(StepType.FIRST, {a: 0.0 for a in self.agents}, 1.0)

    def step(self, actions: dict[AgentID, np.ndarray], messages=None) -> MultiAgentTimeStep:
        if self._terminal:
            raise RuntimeError("step() called on a terminal episode; call reset()")
        for i, agent in enumerate(self.agents):
            a = actions[agent]
            if self.mode == "discrete":
                ai = int(np.asarray(a))
                if not 0 <= ai < 5:
                    raise SpecViolationError(f"{agent}: discrete action {ai} outside [0, 5)")
                self._pos[i] += STEP_SIZE * _DIRS[ai]
            else:
                acc = np.asarray(a, dtype=np.float32).reshape(-1)
                if acc.shape != (2,):
                    raise SpecViolationError(f"{agent}: continuous action shape {acc.shape} != (2,)")
                if np.any(np.abs(acc) > 1.0 + 1e-6):
                    raise SpecViolationError(f"{agent}: acceleration outside [-1, 1]")
                self._vel[i] += acc * DT
                self._pos[i] += self._vel[i] * DT
                self._vel[i] *= DAMPING
                np.clip(self._vel[i], -MAX_SPEED, MAX_SPEED, out=self._vel[i])
        np.clip(self._pos, -1.0, 1.0, out=self._pos)

        rewards = {}
        for i, agent in enumerate(self.agents):
            d = float(np.linalg.norm(self._pos[i] - self._landmarks[self._assignment[i]]))
            r = float(np.exp(-2.0 * d))
            for j in range(self.num_agents):
                if j != i and np.linalg.norm(self._pos[i] - self._pos[j]) < 2 * RADIUS:
                    r -= 1.0
            rewards[agent] = r

        self._steps += 1
        if self._steps >= self.max_steps:
            self._terminal = True
            # Horizon truncation, not termination: keep discount 1 so targets bootstrap.
            return self._timestep(StepType.LAST, rewards, 1.0)
        return self._timestep(StepType.MID, rewards, 1.0)
