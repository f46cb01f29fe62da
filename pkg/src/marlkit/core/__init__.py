from .loop import run_episode, validate_action, validate_timestep
from .types import (
    AgentID,
    ArraySpec,
    ContinuousSpec,
    DiscreteSpec,
    EnvironmentSpec,
    MultiAgentTimeStep,
    SequenceSample,
    SpecViolationError,
    StepType,
    Transition,
)

__all__ = [
    "AgentID",
    "ArraySpec",
    "ContinuousSpec",
    "DiscreteSpec",
    "EnvironmentSpec",
    "MultiAgentTimeStep",
    "SequenceSample",
    "SpecViolationError",
    "StepType",
    "Transition",
    "run_episode",
    "validate_action",
    "validate_timestep",
]
