import numpy as np
import pytest

from fallcast import tensorlib as tl
from fallcast.tensorlib import Tensor

from conftest import finite_difference_error


# ---------------------------------------------------------------------------
# xavier initialization


def test_xavier_shape_and_symmetric_fan_variance():
    rng = np.random.default_rng(7)
    t = tl.xavier_init(3, 5, rng)
    assert t.shape == (5, 3)
    # fan_in = fan_out = 1 gives unit variance
    draws = np.array([tl.xavier_init(1, 1, rng).data[0, 0] for _ in range(20_000)])
    assert abs(draws.var() - 1.0) < 0.05


def test_xavier_sample_variance_matches_formula():
    rng = np.random.default_rng(123)
    t = tl.xavier_init(512, 512, rng)
    # 512 * 512 > 1e5 draws; sample variance within 5% of 2 / 1024
    expected = 2.0 / 1024.0
    assert abs(t.data.var() / expected - 1.0) < 0.05


def test_xavier_seed_determinism():
    a = tl.xavier_init(16, 8, np.random.default_rng(42))
    b = tl.xavier_init(16, 8, np.random.default_rng(42))
    assert np.array_equal(a.data, b.data)


@pytest.mark.parametrize("fans", [(0, 4), (4, 0), (-1, 4)])
def test_xavier_rejects_bad_fans(fans):
    with pytest.raises(ValueError):
        tl.xavier_init(*fans, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# losses


def test_smooth_l1_values():
    zero = tl.smooth_l1(Tensor(np.zeros(5)), Tensor(np.zeros(5)))
    assert float(zero.data) == 0.0
    quad = tl.smooth_l1(Tensor([0.5]), Tensor([0.0]))
    assert float(quad.data) == pytest.approx(0.125, abs=1e-15)
    lin = tl.smooth_l1(Tensor([2.0]), Tensor([0.0]))
    assert float(lin.data) == pytest.approx(1.5, abs=1e-15)


def test_smooth_l1_shape_mismatch():
    with pytest.raises(ValueError):
        tl.smooth_l1(Tensor(np.zeros(3)), Tensor(np.zeros(4)))


def test_cross_entropy_uniform_and_saturated():
    uniform = tl.cross_entropy(Tensor([1.0, 1.0, 1.0]), 0)
    assert float(uniform.data) == pytest.approx(np.log(3.0), abs=1e-12)
    saturated = tl.cross_entropy(Tensor([30.0, -30.0, -30.0]), 0)
    assert float(saturated.data) < 1e-12


def test_cross_entropy_label_out_of_range():
    with pytest.raises(ValueError):
        tl.cross_entropy(Tensor([0.0, 1.0, 2.0]), 3)
    with pytest.raises(ValueError):
        tl.cross_entropy(Tensor([0.0, 1.0]), -1)


def test_cross_entropy_needs_two_classes():
    with pytest.raises(ValueError):
        tl.cross_entropy(Tensor([1.0]), 0)


def test_cross_entropy_gradient_vs_finite_differences():
    rng = np.random.default_rng(5)
    logits = Tensor(rng.normal(size=7), requires_grad=True)
    err = finite_difference_error(lambda: tl.cross_entropy(logits, 3), [logits], step=1e-6)
    assert err < 1e-6


def test_smooth_l1_gradient_vs_finite_differences():
    rng = np.random.default_rng(6)
    # keep |d| away from the quadratic/linear switch at 1 where the second
    # derivative jumps
    pred = Tensor(rng.uniform(-0.8, 0.8, size=(4, 6)), requires_grad=True)
    target = Tensor(rng.uniform(-0.5, 0.5, size=(4, 6)))
    err = finite_difference_error(lambda: tl.smooth_l1(pred, target), [pred])
    assert err < 1e-6


# ---------------------------------------------------------------------------
# backward mechanics


def test_backward_linear_map_gradient():
    # loss = sum(W @ x)  =>  dW = outer(ones, x)
    rng = np.random.default_rng(0)
    w = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    x = Tensor(rng.normal(size=(4, 1)))
    tl.backward(tl.sum_all(tl.matmul(w, x)))
    expected = np.tile(x.data.T, (3, 1))
    np.testing.assert_allclose(w.grad, expected, rtol=1e-12)


def test_backward_disconnected_parameter_gets_no_gradient():
    w = Tensor(np.ones((2, 2)), requires_grad=True)
    lonely = Tensor(np.ones(3), requires_grad=True)
    tl.backward(tl.sum_all(tl.mul(w, w)))
    assert lonely.grad is None
    assert w.grad is not None


def test_backward_rejects_non_scalar_loss():
    w = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ValueError):
        tl.backward(tl.mul(w, w))


def test_backward_accumulates_over_shared_nodes():
    x = Tensor([2.0], requires_grad=True)
    y = tl.add(tl.mul(x, x), tl.mul(x, x))   # 2x^2 -> dy/dx = 4x
    tl.backward(tl.sum_all(y))
    np.testing.assert_allclose(x.grad, [8.0], rtol=1e-12)


def test_no_grad_blocks_recording():
    x = Tensor(np.ones(3), requires_grad=True)
    with tl.no_grad():
        y = tl.mul(x, x)
    assert y.backward_fn is None and y.parents == ()


# ---------------------------------------------------------------------------
# per-op gradient checks (tiny random inputs)


def _rand(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


def test_gradcheck_elementwise_and_matmul():
    rng = np.random.default_rng(11)
    a, b = _rand(rng, 3, 4), _rand(rng, 3, 4)
    m1, m2 = _rand(rng, 3, 4), _rand(rng, 4, 2)

    err = finite_difference_error(
        lambda: tl.mean_all(tl.mul(tl.add(a, b), tl.sigmoid(a))), [a, b])
    assert err < 1e-7
    err = finite_difference_error(
        lambda: tl.mean_all(tl.tanh(tl.matmul(m1, m2))), [m1, m2])
    assert err < 1e-7


def test_gradcheck_linear_relu_slice_concat():
    rng = np.random.default_rng(12)
    x = _rand(rng, 5, 6)
    w = _rand(rng, 4, 6)
    b = _rand(rng, 4)

    def loss():
        h = tl.relu(tl.linear(x, w, b))
        left = tl.slice_axis(h, 1, 0, 2)
        right = tl.slice_axis(h, 1, 2, 4)
        return tl.mean_all(tl.concat([left, right], axis=1))

    assert finite_difference_error(loss, [x, w, b]) < 1e-7


def test_gradcheck_graph_aggregation_ops():
    rng = np.random.default_rng(13)
    a = _rand(rng, 5, 4)              # 5 nodes, 4 edges
    edges = _rand(rng, 2, 3, 4, 2)    # (B, C, E, T)
    nodes = _rand(rng, 2, 3, 5, 2)

    err = finite_difference_error(
        lambda: tl.mean_all(tl.tanh(tl.nodes_from_edges(a, edges))), [a, edges])
    assert err < 1e-7
    err = finite_difference_error(
        lambda: tl.mean_all(tl.tanh(tl.edges_from_nodes(a, nodes))), [a, nodes])
    assert err < 1e-7


def test_gradcheck_channel_linear_and_temporal_conv():
    rng = np.random.default_rng(14)
    x = _rand(rng, 2, 3, 4, 6)        # (B, C, N, T)
    w = _rand(rng, 5, 3)
    b = _rand(rng, 5)
    k = _rand(rng, 3, 5)              # (C, K)
    kb = _rand(rng, 3)

    err = finite_difference_error(
        lambda: tl.mean_all(tl.tanh(tl.channel_linear(w, b, x))), [w, b, x])
    assert err < 1e-7
    err = finite_difference_error(
        lambda: tl.mean_all(tl.tanh(tl.temporal_depthwise_conv(k, kb, x))), [k, kb, x])
    assert err < 1e-7


def test_temporal_conv_preserves_constant_input():
    # kernel summing to 1 acts as identity on a constant-in-time signal
    kernel = Tensor(np.full((2, 5), 0.2))
    bias = Tensor(np.zeros(2))
    x = Tensor(np.broadcast_to(np.arange(6.0).reshape(1, 2, 3, 1), (1, 2, 3, 9)).copy())
    out = tl.temporal_depthwise_conv(kernel, bias, x)
    assert out.data.shape == x.data.shape
    # same padding shortens the effective kernel at the edges
    np.testing.assert_allclose(out.data[..., 2:-2], x.data[..., 2:-2], rtol=1e-12)


def test_graph_aggregation_with_zero_incidence_is_zero():
    a = Tensor(np.zeros((5, 4)))
    edges = Tensor(np.random.default_rng(0).normal(size=(1, 2, 4, 3)))
    out = tl.nodes_from_edges(a, edges)
    assert np.all(out.data == 0.0)


def test_dropout_scales_and_masks():
    rng = np.random.default_rng(3)
    x = Tensor(np.ones((200, 50)))
    y = tl.dropout(x, 0.5, rng)
    kept = y.data != 0.0
    assert np.allclose(y.data[kept], 2.0)
    assert 0.4 < kept.mean() < 0.6


def test_softmax_is_a_simplex():
    p = tl.softmax(np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]), axis=1)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(p >= 0.0)
