import numpy as np
import pytest

from helpers import directional_check, to_float64

from marlkit.core import run_episode
from marlkit.envs import SwitchGame, make_env
from marlkit.numerics import Tape, Tensor, sigmoid, tsum
from marlkit.systems import SequenceBatch, SystemBuilder, SystemSpec
from marlkit.wrappers import (
    AdditiveMixer,
    BroadcastChannel,
    MonotonicMixer,
    apply_fingerprint,
    broadcast_incoming,
    dru,
    fingerprint_vector,
    make_mixer,
    wrap_communication,
    wrap_fingerprint,
)


def test_dru_training_midpoint_and_execution_threshold():
    assert dru(0.0, "training", sigma=0.0) == pytest.approx(0.5)
    assert dru(0.2, "execution") == 1.0
    assert dru(-0.2, "execution") == 0.0


def test_dru_training_gradient_at_zero():
    m = Tensor([[0.0]], requires_grad=True)
    with Tape() as tape:
        out = tsum(sigmoid(m))
    g = tape.gradients(out, [m])[0]
    assert g[0, 0] == pytest.approx(0.25, abs=1e-6)


def test_dru_training_noise_statistics():
    rng = np.random.default_rng(0)
    vals = dru(np.zeros(20_000, np.float32), "training", sigma=2.0, rng=rng)
    assert np.all((vals > 0) & (vals < 1))
    assert abs(vals.mean() - 0.5) < 0.01


def test_dru_modes_validated():
    with pytest.raises(ValueError):
        dru(0.0, "inference")
    with pytest.raises(ValueError):
        dru(0.0, "training", sigma=1.0)  # noise requires an rng


def test_broadcast_channel_validation():
    with pytest.raises(ValueError):
        BroadcastChannel(channel_size=0)
    with pytest.raises(ValueError):
        BroadcastChannel(channel_noise=-1.0)


def test_wrap_communication_appends_slots_for_plain_envs():
    env = make_env("spread_discrete")
    wrapped, layout = wrap_communication(env.spec(), BroadcastChannel(channel_size=1), 0)
    base = int(np.prod(env.spec().observations["agent_0"].shape))
    for a in wrapped.agent_ids:
        assert int(np.prod(wrapped.observations[a].shape)) == base + 2  # N=3, channel 1
    assert layout.message_slice == (base, base + 2)
    assert not layout.native


def test_wrap_communication_reuses_native_slots():
    env = SwitchGame(num_agents=3, seed=0)
    wrapped, layout = wrap_communication(env.spec(), BroadcastChannel(channel_size=1), env.native_message_size)
    assert wrapped is env.spec() or wrapped.observations["agent_0"].shape == (4,)
    assert layout.native
    assert layout.message_slice == env.message_slice("agent_0")
    with pytest.raises(ValueError):
        wrap_communication(env.spec(), BroadcastChannel(channel_size=2), env.native_message_size)


def test_broadcast_incoming_excludes_self_lexicographic():
    msgs = {f"agent_{i}": np.array([float(i)]) for i in range(3)}
    out = broadcast_incoming("agent_1", list(msgs), msgs)
    assert np.array_equal(out, [0.0, 2.0])


def test_fingerprint_vector_and_timestep():
    fp = fingerprint_vector(1.0, 0)
    assert np.array_equal(fp, [1.0, 0.0])
    env = make_env("spread_discrete")
    ts = env.reset()
    wrapped = apply_fingerprint(ts, 0.3, 50_000)
    base = len(ts.observations["agent_0"])
    for a, o in wrapped.observations.items():
        assert len(o) == base + 2
        assert o[-2] == pytest.approx(0.3)
        assert o[-1] == pytest.approx(0.5)
    spec = wrap_fingerprint(env.spec())
    assert int(np.prod(spec.observations["agent_0"].shape)) == base + 2
    with pytest.raises(ValueError):
        fingerprint_vector(0.5, -1)


def test_replayed_fingerprint_keeps_generation_time_values():
    env = make_env("spread_discrete", seed=0)
    spec = SystemSpec(
        "madqn_ff",
        fingerprint=True,
        hyper={"network_sizes": [8], "replay_capacity": 200, "min_size_to_sample": 1},
    )
    b = SystemBuilder(spec, env.spec(), 0, seed=1)
    table = b.make_table()
    ex = b.make_executor("explore", sink=table.insert)
    run_episode(ex, env, max_steps=30)
    eps_at_insert = [tr.extras["agent_0"]["fingerprint"][0] for tr in table.sample(5)]
    # stored fingerprints reflect insertion-time epsilon, not the current one
    current = ex.current_epsilon
    assert any(abs(e - current) > 1e-9 for e in eps_at_insert) or current == 1.0
    item = table.sample(1)[0]
    fp = item.extras["agent_0"]["fingerprint"]
    assert np.array_equal(item.observations["agent_0"][-2:], fp)


def test_additive_mixer_examples():
    mixer = AdditiveMixer()
    q = Tensor(np.array([[2.0, 3.0], [0.0, 0.0]], np.float32))
    out = mixer(q)
    assert np.allclose(out.data, [5.0, 0.0])


def test_monotonic_mixer_requires_state_and_is_monotone():
    rng = np.random.default_rng(0)
    mixer = MonotonicMixer(num_agents=3, state_dim=4, rng=rng)
    with pytest.raises(ValueError):
        mixer(Tensor(np.zeros((1, 3), np.float32)), None)
    probes = 1000
    qs = rng.normal(size=(probes, 3)).astype(np.float32)
    states = rng.normal(size=(probes, 4)).astype(np.float32)
    base = mixer(Tensor(qs), states).data
    for i in range(3):
        bumped = qs.copy()
        bumped[:, i] += 1e-2
        up = mixer(Tensor(bumped), states).data
        assert np.all(up - base >= -1e-6)


def test_monotonic_mixer_gradcheck():
    rng = np.random.default_rng(1)
    mixer = MonotonicMixer(num_agents=2, state_dim=3, rng=rng, embed_dim=8, hyper_hidden=8)
    to_float64(mixer)
    qs = Tensor(rng.normal(size=(4, 2)))
    state = Tensor(rng.normal(size=(4, 3)))
    params = mixer.param_tensors()
    directional_check(lambda: tsum(mixer(qs, state)), params, rng, directions=6)


def test_additive_equals_identity_frozen_monotonic():
    rng = np.random.default_rng(2)
    mixer = MonotonicMixer(num_agents=2, state_dim=1, rng=rng, embed_dim=2)
    # freeze hypernetworks to produce identity weights and zero biases:
    # w1 = [[1,0],[0,1]], b1 = 0, w2 = [1,1], b2 = 0 for every state
    for name, p in mixer.parameters():
        p.data[:] = 0.0
    w1_out__w, w1_out__b = mixer.hyper_w1._layers[-1]
    w1_out__b.data[:] = np.array([1.0, 0.0, 0.0, 1.0], np.float32)  # (N*E) row-major
    w2_out__w, w2_out__b = mixer.hyper_w2._layers[-1]
    w2_out__b.data[:] = 1.0
    qs = np.array([[1.5, -0.5], [2.0, 3.0]], np.float32)
    state = np.zeros((2, 1), np.float32)
    out = mixer(Tensor(qs), state).data
    # ELU is identity for positive activations; q sums here stay positive
    additive = AdditiveMixer()(Tensor(np.maximum(qs, qs))).data
    assert np.allclose(out[1], additive[1], atol=1e-6)


def test_make_mixer_registry():
    rng = np.random.default_rng(0)
    assert isinstance(make_mixer("additive", 2, None, rng), AdditiveMixer)
    assert isinstance(make_mixer("monotonic", 2, 3, rng), MonotonicMixer)
    with pytest.raises(ValueError):
        make_mixer("monotonic", 2, None, rng)
    with pytest.raises(ValueError):
        make_mixer("qplex", 2, 3, rng)


def _dial_setup(channel_noise=0.0, seed=0):
    env = SwitchGame(num_agents=2, seed=seed)
    spec = SystemSpec(
        "dial",
        communication=BroadcastChannel(True, 1, channel_noise),
        hyper={
            "recurrent_trunk_sizes": [8, 8],
            "gru_size": 8,
            "head_size": 8,
            "sequence_length": 4,
            "sequence_period": 4,
            "batch_size": 2,
            "min_size_to_sample": 2,
            "replay_capacity": 100,
        },
    )
    b = SystemBuilder(spec, env.spec(), env.native_message_size, seed=seed)
    table = b.make_table()
    ex = b.make_executor("explore", sink=table.insert)
    for _ in range(6):
        run_episode(ex, env, max_steps=10)
    trainer = b.make_trainer(table.sample)
    return trainer, table


def test_dial_cross_agent_message_gradient_nonzero():
    trainer, table = _dial_setup()
    batch = table.sample(2)
    sb = SequenceBatch(batch, trainer.agent_ids)
    # gradient of agent_1's TD loss wrt agent_0's message-head parameters;
    # with shared weights the heads are one set, so rebuild without sharing
    assert trainer.networks.weight_sharing
    trainer.hyper["shared_weights"] = False
    names0 = trainer.networks.policies["agent_0"].message_parameters()
    with Tape() as tape:
        losses = trainer.agent_losses(sb, agents=["agent_1"])
    grads = tape.gradients(losses["agent_1"], names0)
    total = sum(float(np.abs(g).sum()) for g in grads)
    assert total > 0.0


def test_dial_cross_agent_gradient_matches_finite_difference():
    trainer, table = _dial_setup(seed=3)
    batch = table.sample(2)
    sb = SequenceBatch(batch, trainer.agent_ids)
    head_params = trainer.networks.policies["agent_0"].message_parameters()
    p = head_params[0]

    def loss_value():
        losses = trainer.agent_losses(sb, agents=["agent_1"])
        return losses["agent_1"].item()

    with Tape() as tape:
        losses = trainer.agent_losses(sb, agents=["agent_1"])
    g = tape.gradients(losses["agent_1"], [p])[0]
    idx = np.unravel_index(np.argmax(np.abs(g)), g.shape)
    h = 1e-3
    old = p.data[idx]
    p.data[idx] = old + h
    up = loss_value()
    p.data[idx] = old - h
    dn = loss_value()
    p.data[idx] = old
    fd = (up - dn) / (2 * h)
    assert abs(g[idx]) > 0
    assert abs(fd - g[idx]) / max(abs(fd), abs(g[idx])) < 0.15  # float32 path


def test_fully_padded_sequences_give_zero_loss_and_gradients():
    trainer, table = _dial_setup(seed=5)
    batch = table.sample(2)
    from copy import deepcopy

    dead = deepcopy(batch)
    for seq in dead:
        seq.mask[:] = 0.0
    sb = SequenceBatch(dead, trainer.agent_ids)
    params = [t for _, t in trainer.named_parameters()]
    with Tape() as tape:
        losses = trainer.agent_losses(sb)
        total = None
        for la in losses.values():
            from marlkit.numerics.tensor import add

            total = la if total is None else add(total, la)
    grads = tape.gradients(total, params)
    assert total.item() == 0.0
    assert all(np.allclose(g, 0) for g in grads)
