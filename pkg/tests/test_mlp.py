import numpy as np
import pytest

from cellfree_drl.ddpg.mlp import AdamState, Mlp, adam_step, sigmoid
from oracles import central_difference


def rel_err(analytic, numeric):
    scale = max(np.abs(numeric).max(), np.abs(analytic).max(), 1e-12)
    return np.abs(analytic - numeric).max() / scale


def grad_check(sizes, head, seed, rtol, batch=4):
    rng = np.random.default_rng(seed)
    net = Mlp(sizes, head, rng)
    x = rng.standard_normal((batch, sizes[0]))
    c = rng.standard_normal((batch, sizes[-1]))

    def loss():
        return float((net.forward(x) * c).sum())

    out, cache = net.forward(x, return_cache=True)
    gW, gb, gx = net.backward(cache, c)
    numeric = central_difference(loss, net.params + [x])
    for a, n in zip(gW + gb + [gx], numeric):
        assert rel_err(a, n) <= rtol


@pytest.mark.parametrize("head", ["identity", "sigmoid"])
@pytest.mark.parametrize("seed", range(3))
def test_small_net_gradients(head, seed):
    grad_check([3, 5, 2], head, seed, rtol=1e-5)


@pytest.mark.parametrize("seed", range(2))
def test_deeper_net_gradients(seed):
    grad_check([8, 32, 16, 4], "sigmoid", seed, rtol=1e-4, batch=2)


def test_zero_parameters_give_head_constant():
    for head, value in (("identity", 0.0), ("sigmoid", 0.5)):
        net = Mlp([4, 6, 3], head)
        for p in net.params:
            p[...] = 0.0
        assert np.array_equal(net.forward(np.ones(4)), np.full(3, value))


def test_relu_subgradient_at_zero():
    net = Mlp([1, 1, 1], "identity")
    net.weights[0][...] = 1.0
    net.biases[0][...] = 0.0
    net.weights[1][...] = 2.0
    _, cache = net.forward(np.zeros((1, 1)), return_cache=True)
    gW, gb, gx = net.backward(cache, np.ones((1, 1)))
    assert gx[0, 0] == 0.0 and gb[0][0] == 0.0


def test_parameter_count():
    net = Mlp([7, 5, 3, 2])
    assert net.n_params() == (7 + 1) * 5 + (5 + 1) * 3 + (3 + 1) * 2


def test_wrong_input_width_rejected():
    with pytest.raises(ValueError):
        Mlp([3, 2]).forward(np.ones(4))


def test_non_finite_output_raises():
    net = Mlp([2, 2], "identity")
    net.weights[0][...] = 1e308
    with np.errstate(over="ignore"), pytest.raises(FloatingPointError):
        net.forward(np.array([10.0, 10.0]))


def test_sigmoid_extremes_stable():
    with np.errstate(over="raise"):
        s = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    assert s.tolist() == [0.0, 0.5, 1.0]


def test_dict_round_trip():
    net = Mlp([3, 4, 2], "sigmoid", np.random.default_rng(1))
    clone = Mlp.from_dict(net.to_dict())
    x = np.random.default_rng(2).standard_normal((5, 3))
    assert np.array_equal(net.forward(x), clone.forward(x))


def test_final_scale_shrinks_last_layer():
    a = Mlp([3, 4, 2], rng=np.random.default_rng(0))
    b = Mlp([3, 4, 2], rng=np.random.default_rng(0), final_scale=1e-3)
    assert np.allclose(b.weights[-1], a.weights[-1] * 1e-3)
    assert np.array_equal(a.weights[0], b.weights[0])


def test_adam_zero_gradient_is_noop():
    p = [np.array([1.0, -2.0])]
    st = AdamState.zeros_like(p)
    for _ in range(5):
        adam_step(p, [np.zeros(2)], st, lr=0.1)
    assert p[0].tolist() == [1.0, -2.0]


def test_adam_first_step_closed_form():
    g = np.array([0.3, -2.0, 1e-9])
    p = [np.zeros(3)]
    adam_step(p, [g], AdamState.zeros_like(p), lr=0.01)
    # bias correction makes m_hat = g and sqrt(v_hat) = |g| after one step
    assert np.allclose(p[0], -0.01 * g / (np.abs(g) + 1e-8), rtol=1e-12, atol=0)


def test_adam_constant_gradient_limit():
    p = [np.zeros(1)]
    st = AdamState.zeros_like(p)
    prev = 0.0
    for _ in range(3000):
        adam_step(p, [np.array([4.0])], st, lr=1e-3)
        step, prev = prev - p[0][0], p[0][0]
    assert step == pytest.approx(1e-3, rel=1e-6)
