"""The executor-environment interaction loop and timestep validation."""

from __future__ import annotations

import numpy as np

from .types import AgentID, DiscreteSpec, EnvironmentSpec, MultiAgentTimeStep, StepType


def run_episode(executor, environment, max_steps: int) -> dict[AgentID, float]:
    """Run one episode; returns undiscounted per-agent return sums.

    Stops at the environment's LAST step or after max_steps transitions,
    whichever comes first.
    """
    ts = environment.reset()
    executor.observe_first(ts)
    returns = {agent: 0.0 for agent in ts.observations}
    steps = 0
    while not ts.last() and steps < max_steps:
        actions = executor.select_actions(ts.observations)
        messages = executor.outgoing_messages()
        ts = environment.step(actions, messages=messages)
        executor.observe(actions, next_timestep=ts)
        executor.update()
        for agent, reward in ts.rewards.items():
            returns[agent] += reward
        steps += 1
    return returns


def validate_timestep(ts: MultiAgentTimeStep, spec: EnvironmentSpec) -> list[str]:
    """Check a timestep against an environment spec; returns violation messages."""
    violations: list[str] = []
    if set(ts.observations) != set(ts.rewards):
        violations.append("observations and rewards have different agent key sets")
    if set(ts.observations) != set(spec.observations):
        violations.append("agent key set does not match spec")
        return violations
    for agent in spec.agent_ids:
        ospec = spec.observations[agent]
        obs = np.asarray(ts.observations[agent])
        if obs.shape != ospec.shape:
            violations.append(f"{agent}: observation shape {obs.shape} != spec {ospec.shape}")
            continue
        if np.any(obs < ospec.low - 1e-6) or np.any(obs > ospec.high + 1e-6):
            violations.append(f"{agent}: observation out of bounds")
    if ts.step_type is StepType.FIRST:
        for agent, r in ts.rewards.items():
            if r != 0.0:
                violations.append(f"{agent}: nonzero reward {r} on FIRST step")
    if not 0.0 <= ts.discount <= 1.0:
        violations.append(f"discount {ts.discount} outside [0, 1]")
    if spec.global_state is not None:
        if ts.state is None:
            violations.append("missing global state required by spec")
        elif np.asarray(ts.state).shape != spec.global_state.shape:
            violations.append(
                f"global state shape {np.asarray(ts.state).shape} != spec {spec.global_state.shape}"
            )
    return violations


def validate_action(agent: AgentID, action, spec) -> str | None:
    """Return a violation message when `action` falls outside `spec`, else None."""
    if isinstance(spec, DiscreteSpec):
        a = int(np.asarray(action))
        if not 0 <= a < spec.num_values:
            return f"{agent}: discrete action {a} outside [0, {spec.num_values})"
        return None
    arr = np.asarray(action, dtype=np.float32)
    if arr.shape != spec.shape:
        return f"{agent}: action shape {arr.shape} != spec {spec.shape}"
    if np.any(arr < spec.low - 1e-6) or np.any(arr > spec.high + 1e-6):
        return f"{agent}: continuous action out of bounds"
    return None
