"""Deterministic-policy trainers: MADDPG and its distributional variant.

Critic inputs follow the system architecture (decentralised, centralised, or
networked). Policies receive gradients of the critic with respect to their
own action, with other agents' actions taken from the batch.
"""

from __future__ import annotations

import numpy as np

from ..architectures import ArchitectureKind, permitted_agents
from ..core.types import AgentID, EnvironmentSpec
from ..numerics import (
    Tape,
    Tensor,
    clip_global_norm,
    concat,
    log_softmax,
    make_optimizer,
    mse,
    mul,
    polyak_update,
    reshape,
    scale,
    softmax,
    tmean,
    tsum,
)
from .base import Trainer
from .batching import TransitionBatch
from .networks import AgentNetworks


def categorical_projection(tz: np.ndarray, probs: np.ndarray, atoms: np.ndarray) -> np.ndarray:
    """Project mass `probs` at support positions `tz` onto the fixed atom grid.

    Mass between two atoms is split by linear interpolation; positions beyond
    the grid clamp to the nearest edge atom. Shapes: tz, probs (B, K) with any
    K; result (B, num_atoms), each row summing to probs row sums.
    """
    num_atoms = len(atoms)
    vmin, vmax = float(atoms[0]), float(atoms[-1])
    dz = (vmax - vmin) / (num_atoms - 1)
    tz = np.clip(tz, vmin, vmax)
    b = (tz - vmin) / dz
    lo = np.floor(b).astype(np.int64)
    hi = np.ceil(b).astype(np.int64)
    frac_hi = b - lo
    frac_lo = hi - b + (lo == hi)  # integral positions put all mass on lo
    out = np.zeros((tz.shape[0], num_atoms), dtype=np.float64)
    rows = np.broadcast_to(np.arange(tz.shape[0])[:, None], tz.shape)
    np.add.at(out, (rows, lo), probs * frac_lo)
    np.add.at(out, (rows, hi), probs * frac_hi)
    return out.astype(np.float32)


class MADDPGTrainer(Trainer):
    def __init__(
        self,
        networks: AgentNetworks,
        kind: ArchitectureKind,
        env_spec: EnvironmentSpec,
        hyper: dict,
        sample_fn,
        seed: int = 0,
    ):
        super().__init__(sample_fn, hyper, seed)
        self.networks = networks
        self.kind = kind
        self.env_spec = env_spec
        self.agent_ids = env_spec.agent_ids
        self._named = networks.named_parameters()
        pol = {id(t): t for a in self.agent_ids for t in networks.policies[a].param_tensors()}
        cri = {id(t): t for a in self.agent_ids for t in networks.critics[a].param_tensors()}
        self._policy_tensors = list(pol.values())
        self._critic_tensors = list(cri.values())
        self._opt_policy = make_optimizer(
            hyper["policy_optimizer"], self._policy_tensors, hyper["policy_learning_rate"]
        )
        self._opt_critic = make_optimizer(
            hyper["critic_optimizer"], self._critic_tensors, hyper["critic_learning_rate"]
        )

    def named_parameters(self):
        return self._named

    # -- critic input assembly -------------------------------------------------

    def _assemble_np(self, agent: AgentID, obs: dict, acts: dict) -> np.ndarray:
        included = permitted_agents(self.kind, agent, self.agent_ids)
        return np.concatenate([obs[a] for a in included] + [acts[a] for a in included], axis=1)

    def _assemble_with_policy(self, agent: AgentID, tb: TransitionBatch, own_action: Tensor) -> Tensor:
        included = permitted_agents(self.kind, agent, self.agent_ids)
        parts = [Tensor(tb.obs[a]) for a in included]
        parts += [own_action if a == agent else Tensor(tb.encoded_actions[a]) for a in included]
        return concat(parts, axis=1)

    # -- targets ---------------------------------------------------------------

    def _critic_targets(self, tb: TransitionBatch) -> dict[AgentID, np.ndarray]:
        gamma = self.hyper["discount"]
        next_act = {
            a: self.networks.target_policies[a](Tensor(tb.next_obs[a])).data for a in self.agent_ids
        }
        out = {}
        for a in self.agent_ids:
            x = self._assemble_np(a, tb.next_obs, next_act)
            qbar = self.networks.target_critics[a](Tensor(x)).data.reshape(-1)
            out[a] = tb.rewards[a] + gamma * tb.discount * qbar
        return out

    # -- losses ------------------------------------------------------------------

    def _critic_loss(self, agent: AgentID, tb: TransitionBatch, y: np.ndarray) -> Tensor:
        x = self._assemble_np(agent, tb.obs, tb.encoded_actions)
        q = reshape(self.networks.critics[agent](Tensor(x)), (-1,))
        return mse(q, y)

    def _policy_loss(self, agent: AgentID, tb: TransitionBatch) -> Tensor:
        mu = self.networks.policies[agent](Tensor(tb.obs[agent]))
        x = self._assemble_with_policy(agent, tb, mu)
        q = reshape(self.networks.critics[agent](x), (-1,))
        return scale(tmean(q), -1.0)

    def _update(self, batch) -> dict[str, float]:
        tb = TransitionBatch(batch, self.agent_ids, self.env_spec)
        ys = self._critic_targets(tb)
        losses = {}
        from ..numerics.tensor import add

        with Tape() as tape:
            closs = None
            for a in self.agent_ids:
                la = self._critic_loss(a, tb, ys[a])
                losses[f"critic_loss/{a}"] = la.item()
                closs = la if closs is None else add(closs, la)
        cgrads = tape.gradients(closs, self._critic_tensors)
        cgrads = clip_global_norm(cgrads, self.hyper["max_gradient_norm"])
        self._opt_critic.step(cgrads)

        with Tape() as tape:
            ploss = None
            for a in self.agent_ids:
                la = self._policy_loss(a, tb)
                losses[f"policy_loss/{a}"] = la.item()
                ploss = la if ploss is None else add(ploss, la)
        pgrads = tape.gradients(ploss, self._policy_tensors)
        pgrads = clip_global_norm(pgrads, self.hyper["max_gradient_norm"])
        self._opt_policy.step(pgrads)

        losses["critic_loss"] = float(np.mean([losses[f"critic_loss/{a}"] for a in self.agent_ids]))
        losses["policy_loss"] = float(np.mean([losses[f"policy_loss/{a}"] for a in self.agent_ids]))
        return losses

    def _post_step(self) -> None:
        tau = float(self.hyper["tau"])
        seen: set[int] = set()
        for online_map, target_map in (
            (self.networks.policies, self.networks.target_policies),
            (self.networks.critics, self.networks.target_critics),
        ):
            for a in self.agent_ids:
                key = id(target_map[a])
                if key in seen:
                    continue
                seen.add(key)
                polyak_update(target_map[a].param_tensors(), online_map[a].param_tensors(), tau)

    def optimizer_state(self) -> dict:
        return {"policy": self._opt_policy.state(), "critic": self._opt_critic.state()}

    def load_optimizer_state(self, state: dict) -> None:
        self._opt_policy.load_state(state["policy"])
        self._opt_critic.load_state(state["critic"])


class MAD4PGTrainer(MADDPGTrainer):
    """MADDPG with a categorical distributional critic.

    Critic targets project r + discount * env_discount * z onto the atom grid;
    the critic minimises cross-entropy against the projection, and the policy
    ascends the expected value of the predicted distribution.
    """

    def __init__(self, networks, kind, env_spec, hyper, sample_fn, seed: int = 0):
        super().__init__(networks, kind, env_spec, hyper, sample_fn, seed)
        if hyper["vmin"] >= hyper["vmax"]:
            raise ValueError("vmin must be below vmax")
        self.atoms = np.linspace(hyper["vmin"], hyper["vmax"], int(hyper["num_atoms"])).astype(np.float32)

    def _critic_targets(self, tb: TransitionBatch) -> dict[AgentID, np.ndarray]:
        gamma = self.hyper["discount"]
        next_act = {
            a: self.networks.target_policies[a](Tensor(tb.next_obs[a])).data for a in self.agent_ids
        }
        out = {}
        for a in self.agent_ids:
            x = self._assemble_np(a, tb.next_obs, next_act)
            logits = self.networks.target_critics[a](Tensor(x)).data
            probs = np.exp(logits - logits.max(axis=1, keepdims=True))
            probs /= probs.sum(axis=1, keepdims=True)
            tz = tb.rewards[a][:, None] + gamma * tb.discount[:, None] * self.atoms[None, :]
            out[a] = categorical_projection(tz, probs, self.atoms)
        return out

    def _critic_loss(self, agent: AgentID, tb: TransitionBatch, y: np.ndarray) -> Tensor:
        x = self._assemble_np(agent, tb.obs, tb.encoded_actions)
        logp = log_softmax(self.networks.critics[agent](Tensor(x)))
        return scale(tmean(tsum(mul(Tensor(y), logp), axis=1)), -1.0)

    def _policy_loss(self, agent: AgentID, tb: TransitionBatch) -> Tensor:
        mu = self.networks.policies[agent](Tensor(tb.obs[agent]))
        x = self._assemble_with_policy(agent, tb, mu)
        probs = softmax(self.networks.critics[agent](x))
        q = tsum(mul(probs, Tensor(self.atoms)), axis=1)
        return scale(tmean(q), -1.0)

    def expected_value(self, agent: AgentID, critic_input: np.ndarray) -> np.ndarray:
        logits = self.networks.critics[agent](Tensor(critic_input)).data
        probs = np.exp(logits - logits.max(axis=1, keepdims=True))
        probs /= probs.sum(axis=1, keepdims=True)
        return probs @ self.atoms
