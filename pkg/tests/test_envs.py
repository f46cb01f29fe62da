import numpy as np
import pytest

from marlkit.core import SpecViolationError, StepType
from marlkit.envs import (
    DebugSpread,
    MatrixGame,
    SwitchGame,
    coverage_probability,
    make_env,
    switch_max_days,
)


def _noop(agents):
    return {a: 0 for a in agents}


def test_switch_max_days_formula():
    assert switch_max_days(3) == 6
    assert switch_max_days(4) == 10
    assert switch_max_days(2) == 4
    assert switch_max_days(1) == 4


def test_switch_correct_tell_rewards_plus_one():
    env = SwitchGame(num_agents=3, seed=0)
    for attempt in range(200):
        ts = env.reset()
        visited = {a for a in env.agents if a == env._in_room}
        while not ts.last():
            if env._has_visited == set(env.agents):
                actions = {a: 1 for a in env.agents}
                ts = env.step(actions)
                assert ts.rewards == {a: 1.0 for a in env.agents}
                assert ts.discount == 0.0
                return
            ts = env.step(_noop(env.agents))
    pytest.fail("coverage never reached in 200 episodes")


def test_switch_day_one_tell_is_wrong_for_three_agents():
    env = SwitchGame(num_agents=3, seed=1)
    env.reset()
    ts = env.step({a: 1 for a in env.agents})
    assert all(r == -1.0 for r in ts.rewards.values())
    assert ts.step_type is StepType.LAST


def test_switch_timeout_gives_zero_reward():
    env = SwitchGame(num_agents=3, seed=2)
    ts = env.reset()
    steps = 0
    while not ts.last():
        ts = env.step(_noop(env.agents))
        steps += 1
    assert steps == env.max_days
    assert all(r == 0.0 for r in ts.rewards.values())


def test_switch_tell_by_agent_not_in_room_is_noop():
    env = SwitchGame(num_agents=3, seed=3)
    env.reset()
    outside = [a for a in env.agents if a != env._in_room]
    actions = {a: (1 if a in outside else 0) for a in env.agents}
    ts = env.step(actions)
    assert ts.step_type is StepType.MID


def test_switch_single_agent_day_one_tell_correct():
    env = SwitchGame(num_agents=1, seed=0)
    env.reset()
    ts = env.step({"agent_0": 1})
    assert ts.rewards["agent_0"] == 1.0


def test_switch_message_routing_and_observation_layout():
    env = SwitchGame(num_agents=3, seed=4)
    ts = env.reset()
    in_room = env._in_room
    for a, obs in ts.observations.items():
        assert obs.shape == (4,)
        assert obs[0] == (1.0 if a == in_room else 0.0)
        assert obs[1] == pytest.approx(1 / 6)
        assert np.all(obs[2:] == 0.0)
    msgs = {a: np.array([i % 2], np.float32) for i, a in enumerate(sorted(env.agents))}
    ts = env.step(_noop(env.agents), messages=msgs)
    # receiver sees senders in lexicographic order, self excluded
    obs1 = ts.observations["agent_1"]
    assert obs1[2] == msgs["agent_0"][0] and obs1[3] == msgs["agent_2"][0]


def test_switch_fixed_tell_day_matches_coverage_probability():
    # correct-guess probability of a "tell on day D" policy equals the
    # closed-form probability that D uniform draws cover all agents
    n, day, episodes = 3, 4, 100_000
    env = SwitchGame(num_agents=n, seed=11)
    correct = 0
    for _ in range(episodes):
        env.reset()
        for _ in range(day - 1):
            env.step(_noop(env.agents))
        ts = env.step({a: 1 for a in env.agents})
        correct += ts.rewards[env.agents[0]] == 1.0
    empirical = correct / episodes
    exact = coverage_probability(n, day)
    assert abs(empirical - exact) < 1e-2


def test_coverage_probability_enumeration_oracle():
    # brute-force enumeration of all draw sequences for N=3, D<=10
    for d in range(1, 11):
        total, covered = 0, 0
        for seq in np.ndindex(*([3] * d)):
            total += 1
            covered += len(set(seq)) == 3
        assert coverage_probability(3, d) == pytest.approx(covered / total, abs=1e-12)


def test_spread_reward_on_landmark_is_one():
    env = DebugSpread(num_agents=3, mode="discrete", seed=5)
    env.reset()
    env._pos[:] = np.array([[0.0, 0.0], [0.5, 0.5], [-0.5, -0.5]], np.float32)
    env._landmarks[env._assignment[0]] = np.array([0.0, 0.0], np.float32)
    ts = env.step({a: 4 for a in env.agents})  # stand still
    assert ts.rewards["agent_0"] == pytest.approx(1.0, abs=1e-6)


def test_spread_collision_penalty():
    env = DebugSpread(num_agents=2, mode="discrete", seed=6)
    env.reset()
    env._pos[:] = np.array([[0.2, 0.2], [0.2, 0.2]], np.float32)
    env._landmarks[:] = np.array([[0.2, 0.2], [0.2, 0.2]], np.float32)
    env._assignment = np.arange(2)
    ts = env.step({a: 4 for a in env.agents})
    for a in env.agents:
        assert ts.rewards[a] == pytest.approx(1.0 - 1.0, abs=1e-6)


def test_spread_distance_decay():
    assert np.exp(-2.0 * 10.0) == pytest.approx(2.06e-9, rel=0.01)
    env = DebugSpread(num_agents=2, mode="discrete", seed=7)
    env.reset()
    env._pos[:] = np.array([[1.0, 1.0], [-1.0, -1.0]], np.float32)
    env._landmarks[env._assignment[0]] = np.array([-1.0, -1.0], np.float32)
    env._landmarks[env._assignment[1]] = np.array([1.0, 1.0], np.float32)
    ts = env.step({a: 4 for a in env.agents})
    d = np.sqrt(8.0)
    assert ts.rewards["agent_0"] == pytest.approx(np.exp(-2 * d), rel=1e-4)


def test_spread_reward_bounds_and_monotonicity():
    env = DebugSpread(num_agents=3, mode="discrete", seed=8)
    rng = np.random.default_rng(0)
    ts = env.reset()
    while not ts.last():
        ts = env.step({a: int(rng.integers(5)) for a in env.agents})
        for r in ts.rewards.values():
            assert -(3 - 1) <= r <= 1.0
    # monotone decreasing in distance with no collisions
    ds = np.linspace(0, 2, 20)
    rewards = np.exp(-2 * ds)
    assert np.all(np.diff(rewards) < 0)


def test_spread_continuous_dynamics_and_bounds():
    env = DebugSpread(num_agents=2, mode="continuous", seed=9)
    env.reset()
    env._pos[:] = 0.0
    env._vel[:] = 0.0
    a = {ag: np.array([1.0, 0.0], np.float32) for ag in env.agents}
    ts = env.step(a)
    # vel += 1*0.1 -> 0.1; pos += 0.1*0.1 = 0.01; vel *= 0.75
    assert env._pos[0, 0] == pytest.approx(0.01, abs=1e-6)
    assert env._vel[0, 0] == pytest.approx(0.075, abs=1e-6)
    with pytest.raises(SpecViolationError):
        env.step({ag: np.array([2.0, 0.0], np.float32) for ag in env.agents})


def test_spread_discrete_rejects_bad_action():
    env = DebugSpread(num_agents=2, mode="discrete", seed=10)
    env.reset()
    with pytest.raises(SpecViolationError):
        env.step({a: 7 for a in env.agents})


def test_spread_episode_is_50_steps_with_truncation_discount():
    env = DebugSpread(num_agents=2, mode="discrete", seed=11)
    ts = env.reset()
    steps = 0
    while not ts.last():
        ts = env.step({a: 4 for a in env.agents})
        steps += 1
    assert steps == 50
    assert ts.discount == 1.0  # horizon truncation keeps bootstrapping valid


def test_spread_landmarks_redrawn_each_reset():
    env = DebugSpread(num_agents=3, mode="discrete", seed=12)
    env.reset()
    lm1 = env._landmarks.copy()
    env._terminal = True
    env.reset()
    assert not np.allclose(lm1, env._landmarks)


def test_matrix_game_payoffs_and_shared_reward():
    env = MatrixGame([[1.0, 0.0], [0.0, 1.0]])
    env.reset()
    ts = env.step({"agent_0": 0, "agent_1": 0})
    assert ts.rewards == {"agent_0": 1.0, "agent_1": 1.0}
    env.reset()
    ts = env.step({"agent_0": 0, "agent_1": 1})
    assert ts.rewards == {"agent_0": 0.0, "agent_1": 0.0}
    rng = np.random.default_rng(1)
    payoff = rng.normal(size=(3, 2, 4))
    env = MatrixGame(payoff)
    for _ in range(20):
        env.reset()
        acts = {f"agent_{i}": int(rng.integers(payoff.shape[i])) for i in range(3)}
        ts = env.step(acts)
        assert len(set(ts.rewards.values())) == 1


def test_environments_deterministic_given_seed():
    for key in ("switch", "spread_discrete", "spread_continuous"):
        rolls = []
        for _ in range(2):
            env = make_env(key, seed=77)
            rng = np.random.default_rng(3)
            trace = []
            for _ in range(3):
                ts = env.reset()
                while not ts.last():
                    if key == "switch":
                        acts = {a: 0 for a in env.agents}
                    elif key == "spread_discrete":
                        acts = {a: int(rng.integers(5)) for a in env.agents}
                    else:
                        acts = {a: rng.uniform(-1, 1, 2).astype(np.float32) for a in env.agents}
                    ts = env.step(acts)
                    trace.append(np.concatenate([ts.observations[a] for a in sorted(ts.observations)]))
            rolls.append(np.concatenate(trace))
        assert np.array_equal(rolls[0], rolls[1])


def test_make_env_registry():
    assert isinstance(make_env("switch"), SwitchGame)
    assert make_env("spread_discrete").mode == "discrete"
    assert make_env("spread_continuous").mode == "continuous"
    with pytest.raises(ValueError):
        make_env("smac")
