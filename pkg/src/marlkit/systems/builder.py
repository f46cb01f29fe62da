"""Assembles tables, adders, executors and trainers from a SystemSpec.

All randomness is derived from one master seed through named streams, so a
trainer and every executor construct bit-identical initial networks and any
two builds of the same configuration agree exactly.
"""

from __future__ import annotations

import zlib

import numpy as np

from ..core.types import EnvironmentSpec
from ..replay import ReplayTable, SequenceAdder, TransitionAdder
from ..wrappers import make_mixer, wrap_communication, wrap_fingerprint
from .config import SystemSpec
from .ddpg_trainers import MAD4PGTrainer, MADDPGTrainer
from .executors import (
    FeedForwardValueExecutor,
    GaussianPolicyExecutor,
    RecurrentValueExecutor,
    VariableClient,
)
from .mixing_trainers import MixingTrainer
from .networks import build_networks
from .value_trainers import DIALTrainer, MADQNFeedForwardTrainer, MADQNRecurrentTrainer


def derive_seed(master: int, name: str) -> int:
    return int(np.random.SeedSequence([master & 0x7FFFFFFF, zlib.crc32(name.encode())]).generate_state(1)[0])


class SystemBuilder:
    def __init__(self, system: SystemSpec, base_spec: EnvironmentSpec, native_message_size: int, seed: int):
        self.system = system
        self.seed = seed
        self.base_spec = base_spec
        self.native_message_size = native_message_size
        spec = base_spec
        self.comm_layout = None
        if system.communication is not None:
            spec, self.comm_layout = wrap_communication(spec, system.communication, native_message_size)
        if system.fingerprint:
            spec = wrap_fingerprint(spec)
        self.train_spec = spec  # what networks and stored observations see

    # -- seeds -----------------------------------------------------------------

    def executor_env_seed(self, executor_id: int) -> int:
        return derive_seed(self.seed, f"env/{executor_id}")

    def evaluator_env_seed(self) -> int:
        return derive_seed(self.seed, "env/eval")

    # -- components ------------------------------------------------------------

    def make_table(self) -> ReplayTable:
        h = self.system.hyper
        return ReplayTable(
            capacity=int(h["replay_capacity"]),
            sampler=h["sampler"],
            min_size_to_sample=int(h["min_size_to_sample"]),
            priority_exponent=float(h["priority_exponent"]),
            seed=derive_seed(self.seed, "table"),
        )

    def make_adder(self, sink):
        if self.system.recurrent:
            h = self.system.hyper
            return SequenceAdder(sink, int(h["sequence_length"]), int(h["sequence_period"]))
        return TransitionAdder(sink)

    def make_networks(self):
        rng = np.random.default_rng(derive_seed(self.seed, "net_init"))
        channel_size = self.system.communication.channel_size if self.system.communication else 0
        return build_networks(
            self.train_spec,
            self.system.architecture,
            self.system.algorithm,
            self.system.hyper,
            rng,
            channel_size=channel_size,
        )

    def make_trainer(self, sample_fn):
        algo = self.system.algorithm
        nets = self.make_networks()
        h = self.system.hyper
        tseed = derive_seed(self.seed, "trainer")
        if algo == "madqn_ff":
            return MADQNFeedForwardTrainer(nets, self.train_spec, h, sample_fn, seed=tseed)
        if algo == "madqn_rec":
            return MADQNRecurrentTrainer(nets, self.train_spec, h, sample_fn, seed=tseed)
        if algo == "dial":
            return DIALTrainer(nets, self.train_spec, h, sample_fn, self.comm_layout, seed=tseed)
        if algo in ("vdn", "qmix"):
            state_dim = (
                int(np.prod(self.train_spec.global_state.shape))
                if self.train_spec.global_state is not None
                else None
            )
            mixer_rng = np.random.default_rng(derive_seed(self.seed, "mixer"))
            mixer = make_mixer(self.system.mixer, self.train_spec.num_agents, state_dim, mixer_rng)
            target_rng = np.random.default_rng(derive_seed(self.seed, "mixer"))
            target_mixer = make_mixer(self.system.mixer, self.train_spec.num_agents, state_dim, target_rng)
            return MixingTrainer(nets, mixer, target_mixer, self.train_spec, h, sample_fn, seed=tseed)
        if algo == "maddpg":
            return MADDPGTrainer(nets, self.system.architecture, self.train_spec, h, sample_fn, seed=tseed)
        if algo == "mad4pg":
            return MAD4PGTrainer(nets, self.system.architecture, self.train_spec, h, sample_fn, seed=tseed)
        raise ValueError(f"unknown algorithm {algo!r}")

    def make_executor(self, mode: str, executor_id: str = "0", sink=None, variable_fetch=None):
        nets = self.make_networks()
        h = self.system.hyper
        rng = np.random.default_rng(derive_seed(self.seed, f"executor/{executor_id}/{mode}"))
        adder = self.make_adder(sink) if sink is not None else None
        client = (
            VariableClient(variable_fetch, period=int(h["variable_update_period"]))
            if variable_fetch is not None
            else None
        )
        kwargs = dict(
            agent_ids=self.train_spec.agent_ids,
            networks=nets,
            mode=mode,
            rng=rng,
            adder=adder,
            variable_client=client,
            fingerprint=self.system.fingerprint,
            comm_layout=self.comm_layout,
            hyper=h,
        )
        variant = self.system.executor_variant
        if variant == "feedforward":
            return FeedForwardValueExecutor(**kwargs)
        if variant in ("recurrent", "recurrent_comm"):
            return RecurrentValueExecutor(**kwargs)
        if variant == "gaussian_policy":
            return GaussianPolicyExecutor(action_specs=self.train_spec.actions, **kwargs)
        raise ValueError(f"unknown executor variant {variant!r}")
