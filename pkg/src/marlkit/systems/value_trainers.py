"""Trainers for the deep Q family: feedforward, recurrent, and communicating.

Targets are y = r + discount * env_discount * max_a' Qbar(o', a') with a
periodically hard-copied target network; losses are Huber, averaged over the
batch (mask-weighted for padded sequence tails).
"""

from __future__ import annotations

import numpy as np

from ..core.types import AgentID, EnvironmentSpec
from ..numerics import (
    Tape,
    Tensor,
    clip_global_norm,
    concat,
    gather,
    hard_update,
    huber,
    huber_raw,
    make_optimizer,
    masked_mean,
    slice_axis,
)
from ..numerics.tensor import add
from ..wrappers import CommunicationLayout, dru_training_tensor
from .base import Trainer
from .batching import SequenceBatch, TransitionBatch
from .networks import AgentNetworks


def _unique_tensors(named: list[tuple[str, "Tensor"]]) -> list["Tensor"]:
    return [t for _, t in named]


class MADQNFeedForwardTrainer(Trainer):
    def __init__(
        self,
        networks: AgentNetworks,
        env_spec: EnvironmentSpec,
        hyper: dict,
        sample_fn,
        seed: int = 0,
    ):
        super().__init__(sample_fn, hyper, seed)
        self.networks = networks
        self.env_spec = env_spec
        self.agent_ids = env_spec.agent_ids
        self._named = networks.named_parameters()
        self._tensors = _unique_tensors(self._named)
        self._opt = make_optimizer(
            hyper["optimizer"], self._tensors, hyper["learning_rate"], hyper.get("momentum", 0.0)
        )

    def named_parameters(self):
        return self._named

    def _targets(self, tb: TransitionBatch) -> dict[AgentID, np.ndarray]:
        gamma = self.hyper["discount"]
        out = {}
        for a in self.agent_ids:
            qbar = self.networks.target_policies[a](Tensor(tb.next_obs[a])).data
            out[a] = tb.rewards[a] + gamma * tb.discount * qbar.max(axis=1)
        return out

    def _update(self, batch) -> dict[str, float]:
        tb = TransitionBatch(batch, self.agent_ids, self.env_spec)
        ys = self._targets(tb)
        losses = {}
        with Tape() as tape:
            total = None
            for a in self.agent_ids:
                q = self.networks.policies[a](Tensor(tb.obs[a]))
                qa = gather(q, tb.discrete_actions(a))
                la = huber(qa, ys[a])
                losses[f"loss/{a}"] = la.item()
                total = la if total is None else add(total, la)
        grads = tape.gradients(total, self._tensors)
        grads = clip_global_norm(grads, self.hyper["max_gradient_norm"])
        self._opt.step(grads)
        losses["loss"] = float(np.mean([losses[f"loss/{a}"] for a in self.agent_ids]))
        return losses

    def _post_step(self) -> None:
        if self.trainer_steps % int(self.hyper["target_update_period"]) == 0:
            for a in self.agent_ids:
                self.networks.target_policies[a].copy_from(self.networks.policies[a])

    def optimizer_state(self) -> dict:
        return {"q": self._opt.state()}

    def load_optimizer_state(self, state: dict) -> None:
        self._opt.load_state(state["q"])


class MADQNRecurrentTrainer(MADQNFeedForwardTrainer):
    """Unrolls the GRU over stored sequences; padded steps carry zero loss."""

    def _target_maxq(self, sb: SequenceBatch, agent: AgentID) -> np.ndarray:
        """Target max-Q at sequence positions 1..L, shape (L, B)."""
        net = self.networks.target_policies[agent]
        h = net.initial_state(sb.size)
        maxq = np.empty((sb.length, sb.size), np.float32)
        for t in range(sb.length):
            q, _, h = net.step(Tensor(sb.obs[agent][t]), h)
            if t >= 1:
                maxq[t - 1] = q.data.max(axis=1)
        q, _, _ = net.step(Tensor(sb.next_obs[agent][sb.length - 1]), h)
        maxq[sb.length - 1] = q.data.max(axis=1)
        return maxq

    def _update(self, batch) -> dict[str, float]:
        sb = SequenceBatch(batch, self.agent_ids)
        gamma = self.hyper["discount"]
        ys = {
            a: sb.rewards[a] + gamma * sb.discount * self._target_maxq(sb, a) for a in self.agent_ids
        }
        flat_mask = sb.mask.reshape(-1)
        losses = {}
        with Tape() as tape:
            total = None
            for a in self.agent_ids:
                net = self.networks.policies[a]
                h = net.initial_state(sb.size)
                qa_list = []
                for t in range(sb.length):
                    q, _, h = net.step(Tensor(sb.obs[a][t]), h)
                    qa_list.append(gather(q, sb.actions[a][t]))
                qa = concat(qa_list, axis=0)  # (L*B,), t-major
                la = masked_mean(huber_raw(qa, ys[a].reshape(-1)), flat_mask)
                losses[f"loss/{a}"] = la.item()
                total = la if total is None else add(total, la)
        grads = tape.gradients(total, self._tensors)
        grads = clip_global_norm(grads, self.hyper["max_gradient_norm"])
        self._opt.step(grads)
        losses["loss"] = float(np.mean([losses[f"loss/{a}"] for a in self.agent_ids]))
        return losses


class DIALTrainer(MADQNFeedForwardTrainer):
    """Recurrent Q-learning with a differentiable broadcast channel.

    The unrolled forward recomputes messages in training mode (sigmoid plus
    optional noise), so each agent's TD loss backpropagates through every
    other agent's message head.
    """

    def __init__(self, networks, env_spec, hyper, sample_fn, comm_layout: CommunicationLayout, seed=0):
        super().__init__(networks, env_spec, hyper, sample_fn, seed)
        self.comm_layout = comm_layout

    def _unroll(self, nets, sb: SequenceBatch, train_noise: bool):
        """Joint unroll across agents and time with message substitution.

        Yields (t, {agent: q Tensor}) for t = 0..L-1 plus a final entry
        (L, {agent: q}) computed on the last next-observations.
        """
        layout = self.comm_layout
        sigma = layout.channel.channel_noise if train_noise else 0.0
        ms_start, ms_end = layout.message_slice
        agents = self.agent_ids
        h = {a: nets[a].initial_state(sb.size) for a in agents}
        soft_msgs: dict[AgentID, Tensor] = {}
        results = []
        for t in range(sb.length + 1):
            last = t == sb.length
            qs = {}
            new_msgs = {}
            for a in agents:
                raw = sb.next_obs[a][sb.length - 1] if last else sb.obs[a][t]
                obs_t = Tensor(raw)
                if t == 0:
                    inp = obs_t
                else:
                    # replace the stored (discretised) message slots with the
                    # recomputed differentiable messages from the last step
                    parts = [slice_axis(obs_t, 0, ms_start)]
                    parts.append(concat([soft_msgs[b] for b in agents if b != a], axis=1))
                    if ms_end < obs_t.shape[1]:
                        parts.append(slice_axis(obs_t, ms_end, obs_t.shape[1]))
                    inp = concat(parts, axis=1)
                q, msg_pre, h[a] = nets[a].step(inp, h[a])
                qs[a] = q
                if msg_pre is not None:
                    new_msgs[a] = dru_training_tensor(msg_pre, sigma, self._rng)
            soft_msgs = new_msgs
            results.append(qs)
        return results

    def agent_losses(self, sb: SequenceBatch, agents: list[AgentID] | None = None) -> dict[AgentID, Tensor]:
        """Per-agent masked TD losses as live tape tensors."""
        targets = self._unroll(self.networks.target_policies, sb, train_noise=False)
        gamma = self.hyper["discount"]
        ys = {}
        for a in self.agent_ids:
            maxq = np.stack([targets[t + 1][a].data.max(axis=1) for t in range(sb.length)])
            ys[a] = sb.rewards[a] + gamma * sb.discount * maxq
        online = self._unroll(self.networks.policies, sb, train_noise=True)
        flat_mask = sb.mask.reshape(-1)
        out = {}
        for a in agents or self.agent_ids:
            qa = concat([gather(online[t][a], sb.actions[a][t]) for t in range(sb.length)], axis=0)
            out[a] = masked_mean(huber_raw(qa, ys[a].reshape(-1)), flat_mask)
        return out

    def _update(self, batch) -> dict[str, float]:
        sb = SequenceBatch(batch, self.agent_ids)
        losses = {}
        with Tape() as tape:
            per_agent = self.agent_losses(sb)
            total = None
            for a, la in per_agent.items():
                losses[f"loss/{a}"] = la.item()
                total = la if total is None else add(total, la)
        grads = tape.gradients(total, self._tensors)
        grads = clip_global_norm(grads, self.hyper["max_gradient_norm"])
        self._opt.step(grads)
        losses["loss"] = float(np.mean([losses[f"loss/{a}"] for a in self.agent_ids]))
        return losses
