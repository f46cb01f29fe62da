"""Multi-agent environment interface types.

Observations and rewards are dictionaries indexed by agent id; the discount
is a single scalar shared by all agents. Values are immutable by convention
and safe to serialize for cross-process transfer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

AgentID = str


class StepType(enum.Enum):
    FIRST = 0
    MID = 1
    LAST = 2


@dataclass(frozen=True)
class MultiAgentTimeStep:
    step_type: StepType
    observations: dict[AgentID, np.ndarray]
    rewards: dict[AgentID, float]
    discount: float
    # Optional environment global state, consumed by centralised critics and
    # monotonic mixing; absent for environments without a global_state spec.
    state: np.ndarray | None = None

    def first(self) -> bool:
        return self.step_type is StepType.FIRST

    def last(self) -> bool:
        return self.step_type is StepType.LAST


@dataclass(frozen=True)
class ArraySpec:
    shape: tuple[int, ...]
    low: np.ndarray
    high: np.ndarray

    @staticmethod
    def vector(dim: int, low, high) -> "ArraySpec":
        return ArraySpec(
            (dim,),
            np.broadcast_to(np.asarray(low, dtype=np.float32), (dim,)).copy(),
            np.broadcast_to(np.asarray(high, dtype=np.float32), (dim,)).copy(),
        )


@dataclass(frozen=True)
class DiscreteSpec:
    num_values: int


@dataclass(frozen=True)
class ContinuousSpec:
    shape: tuple[int, ...]
    low: np.ndarray
    high: np.ndarray


@dataclass(frozen=True)
class EnvironmentSpec:
    observations: dict[AgentID, ArraySpec]
    actions: dict[AgentID, DiscreteSpec | ContinuousSpec]
    global_state: ArraySpec | None = None

    def __post_init__(self):
        if set(self.observations) != set(self.actions):
            raise ValueError("observation and action specs must cover the same agents")
        for spec in self.observations.values():
            if np.any(spec.low > spec.high):
                raise ValueError("observation bounds require low <= high")

    @property
    def agent_ids(self) -> list[AgentID]:
        return sorted(self.observations)

    @property
    def num_agents(self) -> int:
        return len(self.observations)


@dataclass
class Transition:
    observations: dict[AgentID, np.ndarray]
    actions: dict[AgentID, np.ndarray]
    rewards: dict[AgentID, float]
    next_observations: dict[AgentID, np.ndarray]
    discount: float
    extras: dict[AgentID, dict[str, np.ndarray]] = field(default_factory=dict)
    state: np.ndarray | None = None
    next_state: np.ndarray | None = None

    def agent_ids(self) -> list[AgentID]:
        return sorted(self.observations)


@dataclass
class SequenceSample:
    steps: list[Transition]
    mask: np.ndarray  # (L,) float32, prefix of ones

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.float32)
        n = int(self.mask.sum())
        if not np.array_equal(self.mask, np.concatenate([np.ones(n), np.zeros(len(self.mask) - n)])):
            raise ValueError("mask must be a prefix of ones")


class SpecViolationError(ValueError):
    """An action or observation fell outside its declared spec."""
