"""Executors: multi-agent actors that select actions, route observations to
adders, and periodically refresh their parameters from the trainer.

Each agent's action is computed from that agent's own observation entry only;
any cross-agent information (messages, fingerprints) arrives inside the
observation vector itself.
"""

from __future__ import annotations

import logging

import numpy as np

from ..core.types import AgentID, MultiAgentTimeStep
from ..numerics import Tensor, epsilon_schedule
from ..wrappers import CommunicationLayout, broadcast_incoming, dru, fingerprint_vector

logger = logging.getLogger(__name__)


class BaseExecutor:
    def __init__(
        self,
        agent_ids: list[AgentID],
        networks,
        mode: str = "explore",
        rng: np.random.Generator | None = None,
        adder=None,
        variable_client=None,
        fingerprint: bool = False,
        comm_layout: CommunicationLayout | None = None,
        hyper: dict | None = None,
    ):
        if mode not in ("explore", "greedy"):
            raise ValueError(f"mode must be 'explore' or 'greedy', got {mode!r}")
        self.agent_ids = list(agent_ids)
        self.networks = networks
        self.mode = mode
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.adder = adder
        self.variable_client = variable_client
        self.fingerprint = fingerprint
        self.comm_layout = comm_layout
        self.hyper = hyper or {}
        self.env_steps = 0
        self._first_pending = False

    # -- exploration state ---------------------------------------------------

    @property
    def current_epsilon(self) -> float:
        if self.mode == "greedy":
            return 0.0
        return epsilon_schedule(
            self.env_steps, self.hyper.get("epsilon_decay", 1e-4), self.hyper.get("min_epsilon", 0.05)
        )

    @property
    def trainer_steps_estimate(self) -> int:
        return self.variable_client.version if self.variable_client is not None else 0

    # -- observation pipeline --------------------------------------------------

    def _transform_obs(self, obs: dict[AgentID, np.ndarray], first: bool) -> dict[AgentID, np.ndarray]:
        out = obs
        if self.comm_layout is not None:
            out = self._apply_messages(out, first)
        if self.fingerprint:
            fp = fingerprint_vector(self.current_epsilon, self.trainer_steps_estimate)
            out = {a: np.concatenate([o, fp]) for a, o in out.items()}
        return out

    def _apply_messages(self, obs, first: bool):
        layout = self.comm_layout
        if layout.native:
            if not first:
                return obs
            # episode start: the channel midpoint stands in for "no message yet"
            out = {}
            for a, o in obs.items():
                o = np.array(o, copy=True)
                o[layout.message_slice[0] : layout.message_slice[1]] = 0.5
                out[a] = o
            return out
        if first:
            incoming = {a: np.full(layout.incoming_width, 0.5, np.float32) for a in obs}
        else:
            incoming = {a: broadcast_incoming(a, self.agent_ids, self._last_messages) for a in obs}
        return {a: np.concatenate([o, incoming[a]]) for a, o in obs.items()}

    def _extras(self) -> dict[AgentID, dict[str, np.ndarray]]:
        if not self.fingerprint:
            return {}
        fp = fingerprint_vector(self.current_epsilon, self.trainer_steps_estimate)
        return {a: {"fingerprint": fp.copy()} for a in self.agent_ids}

    # -- the Block-1 surface ---------------------------------------------------

    def observe_first(self, timestep: MultiAgentTimeStep) -> None:
        self._reset_episode_state()
        self._first_pending = True
        if self.adder is not None:
            ts = self._transformed_timestep(timestep, first=True)
            self.adder.add_first(ts)

    def observe(self, actions, next_timestep: MultiAgentTimeStep) -> None:
        self.env_steps += 1
        if self.adder is not None:
            ts = self._transformed_timestep(next_timestep, first=False)
            self.adder.add(actions, ts, extras=self._extras())

    def _transformed_timestep(self, ts: MultiAgentTimeStep, first: bool) -> MultiAgentTimeStep:
        from dataclasses import replace

        return replace(ts, observations=self._transform_obs(ts.observations, first))

    def select_actions(self, observations, mode: str | None = None):
        obs = self._transform_obs(observations, self._first_pending)
        self._first_pending = False
        return self._select(obs, mode or self.mode)

    def update(self) -> None:
        if self.variable_client is not None:
            self.variable_client.maybe_update(self.env_steps, self._named_tensors())

    def outgoing_messages(self) -> dict[AgentID, np.ndarray] | None:
        return None

    # -- hooks ------------------------------------------------------------------

    def _reset_episode_state(self) -> None:
        pass

    def _select(self, obs, mode):
        raise NotImplementedError

    def _named_tensors(self) -> dict[str, Tensor]:
        out = {}
        for name, t in self.networks.named_parameters():
            out[name] = t
        return out


class FeedForwardValueExecutor(BaseExecutor):
    """Epsilon-greedy over per-agent Q-values."""

    def _select(self, obs, mode):
        eps = self.current_epsilon if mode == "explore" else 0.0
        actions = {}
        for a in self.agent_ids:
            net = self.networks.policies[a]
            if mode == "explore" and self.rng.random() < eps:
                actions[a] = int(self.rng.integers(net.num_actions))
            else:
                q = net(Tensor(obs[a][None, :])).data[0]
                actions[a] = int(np.argmax(q))
        return actions


class RecurrentValueExecutor(BaseExecutor):
    """Epsilon-greedy with a GRU hidden state carried across the episode."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._hidden: dict[AgentID, Tensor] = {}
        self._outgoing: dict[AgentID, np.ndarray] = {}
        self._last_messages: dict[AgentID, np.ndarray] = {}

    def _reset_episode_state(self) -> None:
        self._hidden = {a: self.networks.policies[a].initial_state(1) for a in self.agent_ids}
        self._outgoing = {}
        self._last_messages = {}

    def _select(self, obs, mode):
        if not self._hidden:
            raise RuntimeError("hidden state not reset: call observe_first() before select_actions()")
        eps = self.current_epsilon if mode == "explore" else 0.0
        actions = {}
        for a in self.agent_ids:
            net = self.networks.policies[a]
            q, msg_pre, h = net.step(Tensor(obs[a][None, :]), self._hidden[a])
            self._hidden[a] = h
            if msg_pre is not None:
                bits = dru(msg_pre.data[0], "execution")
                self._outgoing[a] = bits
                self._last_messages[a] = bits
            if mode == "explore" and self.rng.random() < eps:
                actions[a] = int(self.rng.integers(net.num_actions))
            else:
                actions[a] = int(np.argmax(q.data[0]))
        return actions

    def outgoing_messages(self):
        if self.comm_layout is None or not self._outgoing:
            return None
        return dict(self._outgoing)


class GaussianPolicyExecutor(BaseExecutor):
    """Deterministic policies with clipped Gaussian exploration noise."""

    def __init__(self, *args, action_specs=None, **kwargs):
        super().__init__(*args, **kwargs)
        if action_specs is None:
            raise ValueError("action_specs required")
        self.action_specs = action_specs

    def _select(self, obs, mode):
        sigma = self.hyper.get("sigma_explore", 0.1)
        actions = {}
        for a in self.agent_ids:
            net = self.networks.policies[a]
            act = net(Tensor(obs[a][None, :])).data[0].copy()
            spec = self.action_specs[a]
            if mode == "explore" and sigma > 0:
                act += self.rng.normal(0.0, sigma, size=act.shape).astype(np.float32)
            actions[a] = np.clip(act, spec.low, spec.high)
        return actions


class VariableClient:
    """Pulls trainer parameters when the staleness interval has elapsed.

    `fetch(known_version)` returns (version, list[(name, array)] | None); a
    None parameter list means unchanged. Transport failures keep the cached
    copy so the executor can carry on acting.
    """

    def __init__(self, fetch, period: int = 50):
        self._fetch = fetch
        self.period = period
        self.version = 0
        self._last_pull_step = None

    def maybe_update(self, env_steps: int, named_tensors: dict[str, Tensor]) -> bool:
        if self._last_pull_step is not None and env_steps - self._last_pull_step < self.period:
            return False
        self._last_pull_step = env_steps
        try:
            return self._pull(named_tensors)
        except Exception as exc:  # trainer unreachable: keep old parameters
            logger.warning("variable fetch failed (%s); keeping version %d", exc, self.version)
            return False

    def force_update(self, named_tensors: dict[str, Tensor]) -> bool:
        return self._pull(named_tensors)

    def _pull(self, named_tensors: dict[str, Tensor]) -> bool:
        version, params = self._fetch(self.version)
        if version == self.version or params is None:
            self.version = max(self.version, version)
            return False
        for name, arr in params:
            t = named_tensors.get(name)
            if t is None:
                continue
            if t.data.shape != arr.shape:
                raise ValueError(f"variable {name}: shape {arr.shape} != expected {t.data.shape}")
            np.copyto(t.data, arr)
        self.version = version
        return True
