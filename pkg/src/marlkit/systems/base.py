"""Shared trainer machinery: sampling, publication, counters."""

from __future__ import annotations

import numpy as np

from ..numerics import Tensor


class Trainer:
    """A trainer samples the dataset and updates every agent's parameters.

    `sample_fn(batch_size)` returns a list of replay items or raises
    NotReadyError; `step()` propagates that signal so the hosting node can
    back off and retry.
    """

    def __init__(self, sample_fn, hyper: dict, seed: int = 0):
        self._sample = sample_fn
        self.hyper = dict(hyper)
        self.trainer_steps = 0
        self._rng = np.random.default_rng(seed)
        self._variable_source = None

    def attach_variable_source(self, source) -> None:
        self._variable_source = source
        self.publish()

    def publish(self) -> None:
        if self._variable_source is not None:
            self._variable_source.publish(self.named_parameters())

    def step(self) -> dict[str, float]:
        batch = self._sample(int(self.hyper["batch_size"]))
        losses = self._update(batch)
        self.trainer_steps += 1
        self._post_step()
        self.publish()
        return losses

    def _update(self, batch) -> dict[str, float]:
        raise NotImplementedError

    def _post_step(self) -> None:
        pass

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        raise NotImplementedError

    def optimizer_state(self) -> dict:
        return {}

    def load_optimizer_state(self, state: dict) -> None:
        pass
