"""Adders buffer raw environment steps and emit replay items.

TransitionAdder emits one Transition per post-first step. SequenceAdder
emits fixed-length windows of transitions every `period` steps and a
zero-padded remainder at episode end.
"""

from __future__ import annotations

import numpy as np

from ..core.types import AgentID, MultiAgentTimeStep, SequenceSample, Transition


class AdderError(RuntimeError):
    pass


def _zero_like_transition(proto: Transition) -> Transition:
    return Transition(
        observations={a: np.zeros_like(o) for a, o in proto.observations.items()},
        actions={a: np.zeros_like(np.asarray(v)) for a, v in proto.actions.items()},
        rewards={a: 0.0 for a in proto.rewards},
        next_observations={a: np.zeros_like(o) for a, o in proto.next_observations.items()},
        discount=0.0,
        extras={a: {k: np.zeros_like(v) for k, v in ex.items()} for a, ex in proto.extras.items()},
        state=None if proto.state is None else np.zeros_like(proto.state),
        next_state=None if proto.next_state is None else np.zeros_like(proto.next_state),
    )


class _AdderBase:
    def __init__(self, sink):
        """`sink` is any callable accepting one replay item (e.g. table.insert)."""
        self._sink = sink
        self._prev: MultiAgentTimeStep | None = None

    def add_first(self, timestep: MultiAgentTimeStep) -> None:
        self._prev = timestep
        self._episode_reset()

    def _episode_reset(self) -> None:
        pass

    def _build_transition(
        self,
        actions: dict[AgentID, np.ndarray],
        next_timestep: MultiAgentTimeStep,
        extras: dict[AgentID, dict[str, np.ndarray]] | None,
    ) -> Transition:
        if self._prev is None:
            raise AdderError("add() called before add_first()")
        tr = Transition(
            observations=dict(self._prev.observations),
            actions={a: np.asarray(v) for a, v in actions.items()},
            rewards=dict(next_timestep.rewards),
            next_observations=dict(next_timestep.observations),
            discount=float(next_timestep.discount),
            extras=extras or {},
            state=self._prev.state,
            next_state=next_timestep.state,
        )
        self._prev = next_timestep
        return tr


class TransitionAdder(_AdderBase):
    def add(self, actions, next_timestep: MultiAgentTimeStep, extras=None) -> int:
        self._sink(self._build_transition(actions, next_timestep, extras))
        if next_timestep.last():
            self._prev = None
        return 1


class SequenceAdder(_AdderBase):
    def __init__(self, sink, sequence_length: int, period: int | None = None):
        super().__init__(sink)
        if sequence_length < 1:
            raise ValueError("sequence_length must be positive")
        self.sequence_length = sequence_length
        self.period = period if period is not None else sequence_length
        if not 1 <= self.period <= sequence_length:
            raise ValueError("period must be in [1, sequence_length]")
        self._pending: list[Transition] = []

    def _episode_reset(self) -> None:
        self._pending = []

    def add(self, actions, next_timestep: MultiAgentTimeStep, extras=None) -> int:
        tr = self._build_transition(actions, next_timestep, extras)
        self._pending.append(tr)
        emitted = 0
        if len(self._pending) == self.sequence_length:
            self._sink(SequenceSample(list(self._pending), np.ones(self.sequence_length)))
            self._pending = self._pending[self.period :]
            emitted += 1
        if next_timestep.last():
            if self._pending:
                n = len(self._pending)
                pad = _zero_like_transition(self._pending[0])
                steps = list(self._pending) + [pad] * (self.sequence_length - n)
                mask = np.concatenate([np.ones(n), np.zeros(self.sequence_length - n)])
                self._sink(SequenceSample(steps, mask))
                emitted += 1
            self._pending = []
            self._prev = None
        return emitted
