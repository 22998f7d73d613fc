import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nalm_bench import autodiff as ad
from nalm_bench.autodiff import DomainError, Graph, GraphError, ShapeError, Tensor


def numeric_grad(f, x, step=1e-6):
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + step
        up = f(x)
        flat[k] = orig - step
        down = f(x)
        flat[k] = orig
        gflat[k] = (up - down) / (2 * step)
    return g


def test_matmul_backward_matches_closed_form():
    rng = np.random.default_rng(0)
    a = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    b = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
    with Graph() as g:
        loss = ad.sum_(ad.matmul(a, b))
    g.backward(loss)
    assert np.allclose(a.grad, np.ones((4, 2)) @ b.value.T)
    assert np.allclose(b.grad, a.value.T @ np.ones((4, 2)))


def test_shape_mismatch_names_op_and_shapes():
    with pytest.raises(ShapeError) as info:
        ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    assert info.value.op == "matmul"
    assert (2, 3) in info.value.shapes


def test_elementwise_shape_mismatch():
    with pytest.raises(ShapeError):
        Tensor(np.ones((2, 2))) + Tensor(np.ones((3, 2)))


def test_backward_before_forward_is_an_error():
    g = Graph()
    with pytest.raises(GraphError):
        g.backward(Tensor([[1.0]]))


def test_backward_needs_scalar_loss():
    a = Tensor(np.ones((2, 2)), requires_grad=True)
    with Graph() as g:
        out = ad.tanh(a)
    with pytest.raises(ShapeError):
        g.backward(out)


def test_log_domain_error():
    with pytest.raises(DomainError):
        ad.log(Tensor([[0.0, 1.0]]))


def test_rowprod_value_and_gradient_with_a_zero():
    a = Tensor([[2.0, 3.0, 4.0], [0.0, 5.0, 2.0]], requires_grad=True)
    with Graph() as g:
        loss = ad.sum_(ad.rowprod(a))
    g.backward(loss)
    assert np.allclose(ad.rowprod(Tensor([[2.0, 3.0, 4.0]])).value, 24.0)
    assert np.allclose(a.grad, [[12.0, 8.0, 6.0], [10.0, 0.0, 0.0]])


def test_softmax_columns_sum_to_one():
    v = Tensor(np.random.default_rng(1).normal(size=(5, 3)) * 30)
    assert np.allclose(ad.softmax_cols(v).value.sum(axis=0), 1.0)


def test_sigmoid_is_finite_for_large_inputs():
    out = ad.sigmoid(Tensor([[-800.0, 0.0, 800.0]])).value
    assert out[0, 0] == 0.0 and out[0, 1] == 0.5 and out[0, 2] == 1.0


def test_gradients_accumulate_for_reused_inputs():
    a = Tensor([[3.0]], requires_grad=True)
    with Graph() as g:
        loss = a * a + a
    g.backward(loss)
    assert a.grad[0, 0] == pytest.approx(7.0)


def test_ops_outside_a_graph_do_not_record():
    a = Tensor([[1.0]], requires_grad=True)
    out = ad.exp(a)
    assert out.value[0, 0] == pytest.approx(np.e)
    assert Graph.current() is None


def test_eval_graph_replays_with_new_inputs():
    w = Tensor([[2.0], [-1.0]], requires_grad=True)
    with Graph() as g:
        x = g.input(Tensor([[1.0, 1.0]]))
        out = ad.matmul(x, w)
    assert out.value[0, 0] == pytest.approx(1.0)
    again = ad.eval_graph(g, [Tensor([[3.0, 1.0]])])
    assert again.value[0, 0] == pytest.approx(5.0)


def test_clamp_gradient_is_inclusive_at_bounds():
    a = Tensor([[-2.0, -1.0, 0.3, 1.0, 1.5]], requires_grad=True)
    with Graph() as g:
        loss = ad.sum_(ad.clamp(a, -1.0, 1.0))
    g.backward(loss)
    assert a.grad.tolist() == [[0.0, 1.0, 1.0, 1.0, 0.0]]


def test_bce_logits_matches_closed_form():
    z = Tensor([[-3.0], [0.5], [40.0]], requires_grad=True)
    t = Tensor([[0.0], [1.0], [1.0]])
    with Graph() as g:
        loss = ad.bce_logits(z, t)
    g.backward(loss)
    p = 1 / (1 + np.exp(-z.value))
    # -log(1 - p) for z = -3 with t = 0; -log(p) for the two positive targets
    expected = (np.log1p(np.exp(-3.0)) - np.log(p[1, 0]) + np.log1p(np.exp(-40.0))) / 3
    assert loss.item() == pytest.approx(expected, rel=1e-9)
    assert np.allclose(z.grad, (p - t.value) / 3)


UNARY = {
    "tanh": ad.tanh, "sigmoid": ad.sigmoid, "exp": ad.exp, "cos": ad.cos,
    "log_abs_eps": lambda t: ad.log_abs_eps(t, 1e-7),
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_ops_against_finite_differences(name):
    op = UNARY[name]
    x0 = np.random.default_rng(3).uniform(0.3, 1.5, size=(3, 2))

    def f(v):
        return ad.sum_(op(Tensor(v))).item()

    a = Tensor(x0.copy(), requires_grad=True)
    with Graph() as g:
        loss = ad.sum_(op(a))
    g.backward(loss)
    assert np.allclose(a.grad, numeric_grad(f, x0.copy()), atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (3, 4), elements=st.floats(-2, 2)),
       arrays(np.float64, (4, 2), elements=st.floats(-2, 2)))
def test_composite_expression_gradient(xv, wv):
    def f(w):
        return ad.mean(ad.tanh(ad.matmul(Tensor(xv), Tensor(w)))).item()

    w = Tensor(wv.copy(), requires_grad=True)
    with Graph() as g:
        loss = ad.mean(ad.tanh(ad.matmul(Tensor(xv), w)))
    g.backward(loss)
    assert np.allclose(w.grad, numeric_grad(f, wv.copy()), atol=1e-6)
