"""Joint-value trainers: per-agent utilities combined by a mixing network."""

from __future__ import annotations

import logging
import warnings

import numpy as np

from ..core.types import EnvironmentSpec
from ..numerics import (
    Tape,
    Tensor,
    clip_global_norm,
    concat,
    gather,
    huber,
    make_optimizer,
    reshape,
)
from ..wrappers import AdditiveMixer, MonotonicMixer
from .base import Trainer
from .batching import TransitionBatch
from .networks import AgentNetworks

logger = logging.getLogger(__name__)


class MixingTrainer(Trainer):
    """VDN (additive) and QMIX (monotonic) trainer.

    The joint value of the chosen actions regresses on
    y = r + discount * env_discount * mix(max_a' Qbar_i(o'_i, a'), s').
    One optimizer covers all agent networks plus the mixer.
    """

    def __init__(
        self,
        networks: AgentNetworks,
        mixer,
        target_mixer,
        env_spec: EnvironmentSpec,
        hyper: dict,
        sample_fn,
        seed: int = 0,
    ):
        super().__init__(sample_fn, hyper, seed)
        self.networks = networks
        self.mixer = mixer
        self.target_mixer = target_mixer
        self.env_spec = env_spec
        self.agent_ids = env_spec.agent_ids
        self._warned_rewards = False
        if isinstance(target_mixer, MonotonicMixer):
            target_mixer.copy_from(mixer)
            target_mixer.set_trainable(False)
        self._named = networks.named_parameters() + list(mixer.parameters())
        self._tensors = [t for _, t in self._named]
        self._opt = make_optimizer(
            hyper["optimizer"], self._tensors, hyper["learning_rate"], hyper.get("momentum", 0.0)
        )

    def named_parameters(self):
        return self._named

    def _shared_reward(self, tb: TransitionBatch) -> np.ndarray:
        rewards = np.stack([tb.rewards[a] for a in self.agent_ids])
        if not self._warned_rewards and not np.allclose(rewards, rewards[0]):
            self._warned_rewards = True
            warnings.warn("mixing expects a shared reward; averaging heterogeneous agent rewards")
        return rewards.mean(axis=0)

    def _update(self, batch) -> dict[str, float]:
        if isinstance(self.mixer, MonotonicMixer) and batch[0].state is None:
            raise ValueError("monotonic mixing requires transitions with a global state")
        tb = TransitionBatch(batch, self.agent_ids, self.env_spec)
        gamma = self.hyper["discount"]
        maxq = np.stack(
            [
                self.networks.target_policies[a](Tensor(tb.next_obs[a])).data.max(axis=1)
                for a in self.agent_ids
            ],
            axis=1,
        )  # (B, N)
        qtot_next = self.target_mixer(Tensor(maxq), tb.next_state).data
        y = self._shared_reward(tb) + gamma * tb.discount * qtot_next
        with Tape() as tape:
            qa = [
                reshape(gather(self.networks.policies[a](Tensor(tb.obs[a])), tb.discrete_actions(a)), (-1, 1))
                for a in self.agent_ids
            ]
            qtot = self.mixer(concat(qa, axis=1), tb.state)
            loss = huber(qtot, y)
        grads = tape.gradients(loss, self._tensors)
        grads = clip_global_norm(grads, self.hyper["max_gradient_norm"])
        self._opt.step(grads)
        return {"loss": loss.item()}

    def _post_step(self) -> None:
        if self.trainer_steps % int(self.hyper["target_update_period"]) == 0:
            for a in self.agent_ids:
                self.networks.target_policies[a].copy_from(self.networks.policies[a])
            if isinstance(self.mixer, MonotonicMixer):
                self.target_mixer.copy_from(self.mixer)

    def optimizer_state(self) -> dict:
        return {"joint": self._opt.state()}

    def load_optimizer_state(self, state: dict) -> None:
        self._opt.load_state(state["joint"])

    def greedy_joint_action(self, observations: dict, agents=None) -> dict:
        """Greedy per-agent argmax actions (the decentralised execution rule)."""
        out = {}
        for a in agents or self.agent_ids:
            q = self.networks.policies[a](Tensor(np.asarray(observations[a], np.float32)[None]))
            out[a] = int(np.argmax(q.data[0]))
        return out
