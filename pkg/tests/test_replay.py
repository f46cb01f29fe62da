import threading

import numpy as np
import pytest

from marlkit.core import StepType, run_episode
from marlkit.envs import DebugSpread, SwitchGame
from marlkit.replay import (
    AdderError,
    NotReadyError,
    ReplayTable,
    SequenceAdder,
    TransitionAdder,
)


def test_ring_eviction():
    t = ReplayTable(capacity=2, sampler="fifo")
    for item in "abc":
        t.insert(item)
    assert len(t) == 2
    assert t.sample(2) == ["b", "c"]


def test_insert_into_empty_and_counts():
    t = ReplayTable(capacity=10)
    assert len(t) == 0
    t.insert("x")
    assert len(t) == 1
    assert t.info()["insert_count"] == 1


def test_capacity_bound_many_inserts():
    t = ReplayTable(capacity=1000)
    for i in range(100_000):
        t.insert(i)
    assert len(t) == 1000
    assert t.sample(1)[0] >= 99_000


def test_fifo_and_lifo_exactness():
    t = ReplayTable(capacity=10, sampler="fifo")
    for i in (1, 2, 3):
        t.insert(i)
    assert t.sample(2) == [1, 2]
    assert len(t) == 1
    t2 = ReplayTable(capacity=10, sampler="lifo")
    for i in (1, 2, 3):
        t2.insert(i)
    assert t2.sample(1) == [3]
    assert t2.sample(2) == [2, 1]


def test_priority_sampling_frequency():
    t = ReplayTable(capacity=10, sampler="priority", priority_exponent=1.0, seed=0)
    t.insert("one", priority=1.0)
    t.insert("two", priority=3.0)
    draws, hits = 0, 0
    for _ in range(50_000):
        for item in t.sample(2):
            draws += 1
            hits += item == "two"
    assert abs(hits / draws - 0.75) < 0.02


def test_priority_rejects_nonpositive_and_updates():
    t = ReplayTable(capacity=4, sampler="priority", priority_exponent=1.0, seed=1)
    with pytest.raises(ValueError):
        t.insert("x", priority=0.0)
    a = t.insert("a", priority=1.0)
    t.insert("b", priority=1.0)
    assert t.update_priority(a, 100.0)
    hits = sum(1 for _ in range(5_000) for item in t.sample(2) if item == "a")
    assert hits / 10_000 > 0.95
    assert not t.update_priority(999, 1.0)


def test_uniform_frequencies_within_three_sigma():
    n, draws = 20, 100_000
    t = ReplayTable(capacity=100, sampler="uniform", seed=3)
    for i in range(n):
        t.insert(i)
    counts = np.zeros(n)
    for _ in range(draws // n):
        for item in t.sample(n):
            counts[item] += 1
    p = 1.0 / n
    sigma = np.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) < 3.5 * sigma)


def test_min_size_gating_and_not_ready():
    t = ReplayTable(capacity=100, min_size_to_sample=5)
    for i in range(4):
        t.insert(i)
    with pytest.raises(NotReadyError):
        t.sample(1)
    t.insert(5)
    assert len(t.sample(1)) == 1


def test_min_size_gating_under_concurrent_inserters():
    t = ReplayTable(capacity=10_000, min_size_to_sample=1000, seed=5)
    violations = []
    stop = threading.Event()

    def sampler():
        while not stop.is_set():
            try:
                t.sample(8)
                if t.info()["insert_count"] < 1000:
                    violations.append(t.info()["insert_count"])
            except NotReadyError:
                pass

    threads = [threading.Thread(target=sampler) for _ in range(2)]
    for th in threads:
        th.start()

    def inserter(k):
        for i in range(500):
            t.insert((k, i))

    ins = [threading.Thread(target=inserter, args=(k,)) for k in range(4)]
    for th in ins:
        th.start()
    for th in ins:
        th.join()
    stop.set()
    for th in threads:
        th.join()
    assert violations == []
    assert len(t) == 2000


def _episode_stream(env, adder, steps=None, seed=0):
    rng = np.random.default_rng(seed)
    ts = env.reset()
    adder.add_first(ts)
    stream = []
    while not ts.last():
        actions = {a: int(rng.integers(2)) for a in env.agents}
        prev_obs = ts.observations
        ts = env.step(actions)
        adder.add(actions, ts)
        stream.append((prev_obs, actions, ts.rewards))
    return stream


def test_transition_adder_reconstructs_episode():
    env = SwitchGame(num_agents=3, seed=0)
    items = []
    adder = TransitionAdder(items.append)
    stream = _episode_stream(env, adder)
    assert len(items) == len(stream)
    for tr, (obs, actions, rewards) in zip(items, stream):
        for a in env.agents:
            assert np.array_equal(tr.observations[a], obs[a])
            assert int(tr.actions[a]) == actions[a]
            assert tr.rewards[a] == rewards[a]
    # consecutive transitions chain: next_obs[t] == obs[t+1]
    for t0, t1 in zip(items, items[1:]):
        for a in env.agents:
            assert np.array_equal(t0.next_observations[a], t1.observations[a])


def test_one_step_episode_emits_single_terminal_transition():
    env = SwitchGame(num_agents=3, seed=1)
    items = []
    adder = TransitionAdder(items.append)
    ts = env.reset()
    adder.add_first(ts)
    ts = env.step({a: 1 for a in env.agents})
    adder.add({a: 1 for a in env.agents}, ts)
    assert len(items) == 1
    assert items[0].discount == 0.0


def test_add_before_add_first_raises():
    adder = TransitionAdder(lambda item: None)
    env = SwitchGame(num_agents=3, seed=2)
    ts = env.reset()
    with pytest.raises(AdderError):
        adder.add({a: 0 for a in env.agents}, ts)


class _FixedLengthEnv:
    """Deterministic single-agent chain of a given length."""

    agents = ["agent_0"]
    native_message_size = 0

    def __init__(self, length):
        self.length = length
        self.t = 0

    def reset(self):
        self.t = 0
        return self._ts(StepType.FIRST)

    def step(self, actions, messages=None):
        self.t += 1
        st = StepType.LAST if self.t >= self.length else StepType.MID
        return self._ts(st)

    def _ts(self, st):
        from marlkit.core import MultiAgentTimeStep

        return MultiAgentTimeStep(
            st,
            {"agent_0": np.array([float(self.t)], np.float32)},
            {"agent_0": 0.0 if st is StepType.FIRST else 1.0},
            0.0 if st is StepType.LAST else 1.0,
        )


def test_sequence_adder_seven_step_episode():
    env = _FixedLengthEnv(7)
    items = []
    adder = SequenceAdder(items.append, sequence_length=6, period=6)
    ts = env.reset()
    adder.add_first(ts)
    while not ts.last():
        ts = env.step({"agent_0": 0})
        adder.add({"agent_0": 0}, ts)
    assert len(items) == 2
    assert np.array_equal(items[0].mask, np.ones(6))
    assert np.array_equal(items[1].mask, np.array([1, 0, 0, 0, 0, 0], np.float32))
    # the padded tail contributes zero reward
    assert items[1].steps[1].rewards["agent_0"] == 0.0


def test_sequence_adder_exact_length_episode():
    env = _FixedLengthEnv(6)
    items = []
    adder = SequenceAdder(items.append, sequence_length=6, period=6)
    ts = env.reset()
    adder.add_first(ts)
    while not ts.last():
        ts = env.step({"agent_0": 0})
        adder.add({"agent_0": 0}, ts)
    assert len(items) == 1
    assert np.array_equal(items[0].mask, np.ones(6))


def test_sequence_adder_spread_episode_count():
    env = DebugSpread(num_agents=2, mode="discrete", seed=3)
    items = []
    adder = SequenceAdder(items.append, sequence_length=6, period=6)
    rng = np.random.default_rng(0)
    ts = env.reset()
    adder.add_first(ts)
    while not ts.last():
        acts = {a: int(rng.integers(5)) for a in env.agents}
        ts = env.step(acts)
        adder.add(acts, ts)
    # 50 transitions -> 8 full windows + 1 padded tail of 2
    assert len(items) == 9
    assert np.array_equal(items[-1].mask, np.array([1, 1, 0, 0, 0, 0], np.float32))
