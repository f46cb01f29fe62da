from .base import Trainer
from .batching import SequenceBatch, TransitionBatch
from .builder import SystemBuilder, derive_seed
from .config import ALGORITHMS, DEFAULT_HYPERS, ENV_OVERRIDES, POLICY_BASED, SystemSpec, VALUE_BASED
from .ddpg_trainers import MAD4PGTrainer, MADDPGTrainer, categorical_projection
from .executors import (
    BaseExecutor,
    FeedForwardValueExecutor,
    GaussianPolicyExecutor,
    RecurrentValueExecutor,
    VariableClient,
)
from .mixing_trainers import MixingTrainer
from .networks import (
    AgentNetworks,
    CriticNetwork,
    PolicyNetwork,
    QNetwork,
    RecurrentQNetwork,
    build_networks,
)
from .value_trainers import DIALTrainer, MADQNFeedForwardTrainer, MADQNRecurrentTrainer

__all__ = [
    "ALGORITHMS",
    "AgentNetworks",
    "BaseExecutor",
    "CriticNetwork",
    "DEFAULT_HYPERS",
    "DIALTrainer",
    "ENV_OVERRIDES",
    "FeedForwardValueExecutor",
    "GaussianPolicyExecutor",
    "MAD4PGTrainer",
    "MADDPGTrainer",
    "MADQNFeedForwardTrainer",
    "MADQNRecurrentTrainer",
    "MixingTrainer",
    "POLICY_BASED",
    "PolicyNetwork",
    "QNetwork",
    "RecurrentQNetwork",
    "RecurrentValueExecutor",
    "SequenceBatch",
    "SystemBuilder",
    "SystemSpec",
    "Trainer",
    "TransitionBatch",
    "VALUE_BASED",
    "VariableClient",
    "build_networks",
    "categorical_projection",
    "derive_seed",
]
