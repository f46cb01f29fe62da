import numpy as np
import pytest

from marlkit.numerics import (
    Adam,
    MLP,
    NonFiniteGradient,
    RMSProp,
    ShapeError,
    Tape,
    Tensor,
    clip_global_norm,
    decode_params,
    elu,
    encode_params,
    epsilon_schedule,
    gather,
    gru_step,
    hard_update,
    huber,
    load_params,
    matmul,
    polyak_update,
    sigmoid,
    softmax,
    tanh,
    tmax,
    tsum,
)
from marlkit.numerics.nets import GRUCell


def test_elu_values():
    x = Tensor([0.0, -1.0, 2.0])
    y = elu(x).data
    assert y[0] == 0.0
    assert y[1] == pytest.approx(np.expm1(-1.0), abs=1e-6)
    assert y[2] == 2.0


def test_softmax_symmetry():
    y = softmax(Tensor([[0.0, 0.0]])).data
    assert np.allclose(y, [[0.5, 0.5]])


def test_tanh_gradient_at_zero():
    x = Tensor([[0.0]], requires_grad=True)
    with Tape() as tape:
        y = tsum(tanh(x))
    g = tape.gradients(y, [x])[0]
    assert g[0, 0] == pytest.approx(1.0, abs=1e-6)
    # finite difference agreement
    eps = 1e-4
    fd = (np.tanh(eps) - np.tanh(-eps)) / (2 * eps)
    assert abs(g[0, 0] - fd) < 1e-6


def test_matmul_shape_error_names_shapes():
    with pytest.raises(ShapeError, match="matmul"):
        matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))


def test_gather_and_argmax_tie_breaking():
    q = Tensor(np.array([[1.0, 1.0, 0.5]]))
    assert int(np.argmax(q.data[0])) == 0  # lowest index wins ties
    picked = gather(Tensor(np.array([[1.0, 2.0], [3.0, 4.0]])), np.array([1, 0]))
    assert np.allclose(picked.data, [2.0, 3.0])


def test_gru_trivial_zero_weight_cases():
    rng = np.random.default_rng(0)
    cell = GRUCell(1, 1, rng)
    for _, p in cell.parameters():
        p.data[:] = 0.0
    h1 = cell(Tensor([[0.0]]), Tensor([[1.0]])).item()
    h0 = cell(Tensor([[0.0]]), Tensor([[0.0]])).item()
    assert h1 == pytest.approx(0.5, abs=1e-7)
    assert h0 == pytest.approx(0.0, abs=1e-7)


def test_gru_shape_error():
    with pytest.raises(ShapeError):
        gru_step(
            Tensor(np.zeros((1, 2))),
            Tensor(np.zeros((1, 3))),
            Tensor(np.zeros((2, 6))),
            Tensor(np.zeros((3, 9))),
            Tensor(np.zeros(6)),
        )


def test_mlp_parameter_count_and_activation_schedule():
    rng = np.random.default_rng(1)
    mlp = MLP(7, [256, 256, 256], 5, rng)
    expected = (7 + 1) * 256 + (256 + 1) * 256 + (256 + 1) * 256 + (256 + 1) * 5
    assert mlp.param_count() == expected
    # first hidden layer saturates like tanh, later ones do not go below -1
    x = Tensor(np.full((1, 7), 100.0, np.float32))
    w0, b0 = mlp._layers[0]
    pre = x.data @ w0.data + b0.data
    post = np.tanh(pre)
    assert np.all(np.abs(post) <= 1.0)


def test_adam_first_step_matches_hand_evaluation():
    p = Tensor(np.zeros(1), requires_grad=True)
    opt = Adam([p], lr=1e-4)
    opt.step([np.ones(1, np.float32)])
    # bias-corrected first step: delta = -lr * g / (|g| + eps)
    assert abs(p.data[0] + 1e-4) < 1e-7


def test_adam_zero_gradient_and_determinism():
    p1 = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    opt1 = Adam([p1], lr=1e-3)
    opt1.step([np.zeros(2, np.float32)])
    assert np.allclose(p1.data, [1.0, 2.0])

    p2 = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    opt2 = Adam([p2], lr=1e-3)
    g = np.array([0.3, -0.7], np.float32)
    opt1.step([g])
    opt2.step([np.zeros(2, np.float32)])
    opt2.step([g])
    assert np.array_equal(p1.data, p2.data)


def test_adam_rejects_non_finite_gradient():
    p = Tensor(np.zeros(1), requires_grad=True)
    opt = Adam([p], lr=1e-3)
    with pytest.raises(NonFiniteGradient):
        opt.step([np.array([np.nan], np.float32)])


def test_rmsprop_moves_against_gradient():
    p = Tensor(np.zeros(1), requires_grad=True)
    opt = RMSProp([p], lr=1e-2, momentum=0.95)
    opt.step([np.ones(1, np.float32)])
    assert p.data[0] < 0


def test_clip_global_norm():
    grads = [np.array([3.0], np.float32), np.array([4.0], np.float32)]
    same = clip_global_norm(grads, 40.0)
    assert same[0][0] == 3.0 and same[1][0] == 4.0
    clipped = clip_global_norm(grads, 1.0)
    assert clipped[0][0] == pytest.approx(0.6, abs=1e-6)
    assert clipped[1][0] == pytest.approx(0.8, abs=1e-6)
    huge = clip_global_norm(grads, 1e10)
    assert huge[0][0] == 3.0


def test_polyak_update_examples_and_contraction():
    t = Tensor(np.zeros(3), requires_grad=False)
    o = Tensor(np.ones(3), requires_grad=False)
    polyak_update([t], [o], tau=0.01)
    assert np.allclose(t.data, 0.01)
    polyak_update([t], [o], tau=1.0)
    assert np.allclose(t.data, 1.0)
    polyak_update([t], [o], tau=0.37)
    assert np.allclose(t.data, 1.0)  # online == target stays put
    # geometric contraction at rate (1 - tau)
    t = Tensor(np.zeros(1))
    o1 = Tensor(np.ones(1))
    tau = 0.25
    for k in range(1, 20):
        polyak_update([t], [o1], tau)
        assert t.data[0] == pytest.approx(1.0 - (1.0 - tau) ** k, rel=1e-5)


def test_polyak_rejects_bad_tau_and_shapes():
    with pytest.raises(ValueError):
        polyak_update([Tensor(np.zeros(1))], [Tensor(np.ones(1))], tau=0.0)
    with pytest.raises(ValueError):
        polyak_update([Tensor(np.zeros(2))], [Tensor(np.ones(3))], tau=0.5)


def test_epsilon_schedule():
    assert epsilon_schedule(0, 1e-4, 0.05) == 1.0
    assert epsilon_schedule(9500, 1e-4, 0.05) == pytest.approx(0.05)
    assert epsilon_schedule(20000, 1e-4, 0.05) == 0.05


def test_hard_update_and_param_serialization_roundtrip():
    rng = np.random.default_rng(3)
    src = MLP(4, [8], 2, rng)
    dst = MLP(4, [8], 2, rng)
    hard_update(dst.param_tensors(), src.param_tensors())
    blob = encode_params(src.parameters())
    decoded = decode_params(blob)
    assert [n for n, _ in decoded] == [n for n, _ in src.parameters()]
    for (_, t), (_, arr) in zip(src.parameters(), decoded):
        assert np.array_equal(t.data, arr)
    # load into a mismatched net fails
    other = MLP(4, [9], 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        load_params(other.parameters(), blob)


def test_tmax_reduces_and_routes_gradient():
    x = Tensor(np.array([[1.0, 5.0, 2.0]]), requires_grad=True)
    with Tape() as tape:
        m = tsum(tmax(x, axis=1))
    g = tape.gradients(m, [x])[0]
    assert np.allclose(g, [[0.0, 1.0, 0.0]])


def test_huber_quadratic_and_linear_regions():
    p = Tensor(np.array([0.5, 3.0]))
    loss = huber(p, np.zeros(2, np.float32))
    expected = (0.5 * 0.25 + (3.0 - 0.5)) / 2
    assert loss.item() == pytest.approx(expected, rel=1e-6)


def test_sigmoid_extremes_stable():
    y = sigmoid(Tensor([-100.0, 0.0, 100.0])).data
    assert y[0] == pytest.approx(0.0, abs=1e-6)
    assert y[1] == pytest.approx(0.5, abs=1e-7)
    assert y[2] == pytest.approx(1.0, abs=1e-6)
