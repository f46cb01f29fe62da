"""System specification and per-algorithm hyperparameter defaults.

Every default here is asserted against its source by the provenance test
suite; environment-specific overrides (the switch game's RMSProp settings,
for example) are applied on top by the harness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..architectures import ArchitectureKind, decentralised
from ..wrappers import BroadcastChannel

ALGORITHMS = ("madqn_ff", "madqn_rec", "dial", "vdn", "qmix", "maddpg", "mad4pg")

VALUE_BASED = ("madqn_ff", "madqn_rec", "dial", "vdn", "qmix")
POLICY_BASED = ("maddpg", "mad4pg")

# Shared plumbing defaults (not table-sourced).
_COMMON = {
    "replay_capacity": 100_000,
    "min_size_to_sample": 1_000,
    "sampler": "uniform",
    "train_period": 8,  # environment steps per trainer step
    "variable_update_period": 50,  # executor parameter-poll interval, env steps
    "priority_exponent": 0.6,
}

_VALUE_DEFAULTS = {
    **_COMMON,
    "optimizer": "adam",
    "learning_rate": 1e-4,
    "momentum": 0.0,
    "network_sizes": [512, 512, 256],
    "discount": 0.99,
    "batch_size": 512,
    "max_gradient_norm": 1e10,
    "shared_weights": True,
    "min_epsilon": 0.05,
    "epsilon_decay": 1e-4,
    "epsilon_schedule": "linear",
    "target_update_period": 100,
    # recurrent variants: two FC layers, a GRU core, and FC heads
    "recurrent_trunk_sizes": [128, 128],
    "gru_size": 128,
    "head_size": 128,
    "sequence_length": 6,
    "sequence_period": 6,
}

_MADDPG_DEFAULTS = {
    **_COMMON,
    "policy_optimizer": "adam",
    "policy_learning_rate": 1e-4,
    "policy_sizes": [256, 256, 256],
    "critic_optimizer": "adam",
    "critic_learning_rate": 1e-4,
    "critic_sizes": [512, 512, 256],
    "discount": 0.99,
    "batch_size": 1024,
    "max_gradient_norm": 40.0,
    "shared_weights": True,
    "tau": 0.01,
    "sigma_explore": 0.1,
}

_MAD4PG_DEFAULTS = {
    **_COMMON,
    "policy_optimizer": "adam",
    "policy_learning_rate": 1e-4,
    "policy_sizes": [512, 512, 256],
    "critic_optimizer": "adam",
    "critic_learning_rate": 1e-4,
    "critic_sizes": [256, 256, 256],
    "discount": 0.99,
    "batch_size": 1024,
    "max_gradient_norm": 1e10,
    "shared_weights": True,
    "tau": 0.01,
    "sigma_explore": 0.1,
    "num_atoms": 51,
    "vmax": 150.0,
    "vmin": -150.0,
}

DEFAULT_HYPERS: dict[str, dict] = {
    "madqn_ff": dict(_VALUE_DEFAULTS),
    "madqn_rec": dict(_VALUE_DEFAULTS),
    "dial": dict(_VALUE_DEFAULTS),
    "vdn": dict(_VALUE_DEFAULTS),
    "qmix": dict(_VALUE_DEFAULTS),
    "maddpg": dict(_MADDPG_DEFAULTS),
    "mad4pg": dict(_MAD4PG_DEFAULTS),
}

# Per-environment overrides, applied by the harness on top of the system
# defaults when the run targets that environment.
ENV_OVERRIDES: dict[str, dict] = {
    "switch": {
        "optimizer": "rmsprop",
        "learning_rate": 1e-4,
        "momentum": 0.95,
        "epsilon_decay": 2.5e-4,
        "sequence_length": 6,
        "sequence_period": 6,
        "discount": 1.0,
        "batch_size": 32,
        "replay_capacity": 20_000,
        "min_size_to_sample": 64,
        "train_period": 4,
    },
    "matrix": {
        "network_sizes": [64, 64],
        "batch_size": 32,
        "replay_capacity": 5_000,
        "min_size_to_sample": 32,
        "train_period": 1,
        "learning_rate": 1e-3,
        "target_update_period": 50,
        "epsilon_decay": 5e-4,
    },
}


@dataclass
class SystemSpec:
    """Full algorithm configuration: what to build and how to train it."""

    algorithm: str
    architecture: ArchitectureKind = field(default_factory=decentralised)
    hyper: dict = field(default_factory=dict)
    communication: BroadcastChannel | None = None
    fingerprint: bool = False
    mixer: str | None = None  # additive | monotonic

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        merged = dict(DEFAULT_HYPERS[self.algorithm])
        merged.update(self.hyper)
        self.hyper = merged
        if self.algorithm == "dial":
            if self.communication is None:
                self.communication = BroadcastChannel()
        if self.algorithm == "vdn" and self.mixer is None:
            self.mixer = "additive"
        if self.algorithm == "qmix" and self.mixer is None:
            self.mixer = "monotonic"
        self._validate()

    def _validate(self):
        if self.algorithm == "dial" and self.communication is None:
            raise ValueError("dial requires a communication channel")
        if self.algorithm == "vdn" and self.mixer != "additive":
            raise ValueError("vdn uses additive mixing")
        if self.algorithm == "qmix" and self.mixer != "monotonic":
            raise ValueError("qmix uses monotonic mixing")
        if self.algorithm == "mad4pg":
            for key in ("num_atoms", "vmin", "vmax"):
                if key not in self.hyper:
                    raise ValueError(f"mad4pg requires hyperparameter {key}")
            if self.hyper["vmin"] >= self.hyper["vmax"]:
                raise ValueError("mad4pg requires vmin < vmax")
        if self.communication is not None and self.algorithm not in ("dial",):
            raise ValueError("communication is only supported by the dial system")

    @property
    def recurrent(self) -> bool:
        return self.algorithm in ("madqn_rec", "dial")

    @property
    def value_based(self) -> bool:
        return self.algorithm in VALUE_BASED

    @property
    def executor_variant(self) -> str:
        if self.algorithm == "dial":
            return "recurrent_comm"
        if self.algorithm == "madqn_rec":
            return "recurrent"
        if self.algorithm in POLICY_BASED:
            return "gaussian_policy"
        return "feedforward"

    @property
    def trainer_variant(self) -> str:
        return self.algorithm
