from .matrix import MatrixGame
from .spread import DebugSpread
from .switch import SwitchGame, coverage_probability, switch_max_days

# Additively decomposable payoff: f(a) + g(b) with f=[1,3], g=[0,2].
VDN_PAYOFF = [[1.0, 3.0], [3.0, 5.0]]

# Payoff admitting a monotone-mixing fit whose greedy action is the optimum
# (0, 0), while the best additive fit under broad sampling points to (1, 0):
# row means favour agent_0 action 1, column means favour agent_1 action 0.
QMIX_PAYOFF = [[8.0, -12.0], [0.0, 6.0]]


def make_env(key: str, seed: int = 0, num_agents: int = 3, payoff=None):
    """Environment registry keyed by config name."""
    if key == "switch":
        return SwitchGame(num_agents=num_agents, seed=seed)
    if key == "spread_discrete":
        return DebugSpread(num_agents=num_agents, mode="discrete", seed=seed)
    if key == "spread_continuous":
        return DebugSpread(num_agents=num_agents, mode="continuous", seed=seed)
    if key == "matrix":
        return MatrixGame(payoff if payoff is not None else VDN_PAYOFF, seed=seed)
    if key == "matrix_qmix":
        return MatrixGame(payoff if payoff is not None else QMIX_PAYOFF, seed=seed)
    raise ValueError(f"unknown environment key {key!r}")


__all__ = [
    "DebugSpread",
    "MatrixGame",
    "QMIX_PAYOFF",
    "SwitchGame",
    "VDN_PAYOFF",
    "coverage_probability",
    "make_env",
    "switch_max_days",
]
