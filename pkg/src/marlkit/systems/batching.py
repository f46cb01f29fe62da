"""Stacking replay items into per-agent training arrays."""

from __future__ import annotations

import numpy as np

from ..architectures import encode_action
from ..core.types import AgentID, EnvironmentSpec, SequenceSample, Transition


class TransitionBatch:
    def __init__(self, batch: list[Transition], agent_ids: list[AgentID], spec: EnvironmentSpec):
        self.size = len(batch)
        self.agent_ids = agent_ids
        self.obs = {a: np.stack([np.asarray(t.observations[a], np.float32) for t in batch]) for a in agent_ids}
        self.next_obs = {
            a: np.stack([np.asarray(t.next_observations[a], np.float32) for t in batch]) for a in agent_ids
        }
        self.rewards = {a: np.array([t.rewards[a] for t in batch], np.float32) for a in agent_ids}
        self.discount = np.array([t.discount for t in batch], np.float32)
        self.actions = {a: np.stack([np.asarray(t.actions[a]) for t in batch]) for a in agent_ids}
        self.encoded_actions = {
            a: np.stack([encode_action(t.actions[a], spec.actions[a]) for t in batch]) for a in agent_ids
        }
        has_state = batch[0].state is not None
        self.state = np.stack([t.state for t in batch]).astype(np.float32) if has_state else None
        self.next_state = np.stack([t.next_state for t in batch]).astype(np.float32) if has_state else None

    def discrete_actions(self, agent: AgentID) -> np.ndarray:
        return self.actions[agent].astype(np.int64).reshape(self.size)


class SequenceBatch:
    """(L, B, ...) arrays per agent from a batch of fixed-length sequences."""

    def __init__(self, batch: list[SequenceSample], agent_ids: list[AgentID]):
        self.size = len(batch)
        self.length = len(batch[0].steps)
        self.agent_ids = agent_ids
        L, B = self.length, self.size
        self.mask = np.stack([s.mask for s in batch], axis=1)  # (L, B)
        self.obs = {}
        self.next_obs = {}
        self.actions = {}
        self.rewards = {}
        self.discount = np.empty((L, B), np.float32)
        for a in agent_ids:
            self.obs[a] = np.stack(
                [[np.asarray(s.steps[t].observations[a], np.float32) for s in batch] for t in range(L)]
            )
            self.next_obs[a] = np.stack(
                [[np.asarray(s.steps[t].next_observations[a], np.float32) for s in batch] for t in range(L)]
            )
            self.actions[a] = np.array(
                [[int(np.asarray(s.steps[t].actions[a])) for s in batch] for t in range(L)], np.int64
            )
            self.rewards[a] = np.array(
                [[s.steps[t].rewards[a] for s in batch] for t in range(L)], np.float32
            )
        for t in range(L):
            for b, s in enumerate(batch):
                self.discount[t, b] = s.steps[t].discount
