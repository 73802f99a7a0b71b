import numpy as np
import pytest

from est.errors import GraphError, ShapeError
from est.tensor import (
    Graph,
    Tensor,
    backward,
    batched_gather,
    binary_cross_entropy,
    concat,
    embedding,
    gather_rows,
    grad_check,
    grad_check_many,
    masked_softmax_rows,
    matmul,
    mean_axis,
    mul,
    narrow,
    reshape,
    rms_norm,
    sigmoid,
    silu,
    softmax_rows,
    sub,
    sum_all,
    sum_axis,
    token_matmul,
    topk_rows,
    transpose,
)


def test_backward_sum_gives_ones():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    with Graph():
        loss = sum_all(x)
        backward(loss)
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_backward_quadratic_identity():
    x = Tensor(np.array([1.0, -2.0, 0.5]), requires_grad=True)
    with Graph():
        loss = mul(sum_all(mul(x, x)), 0.5)
        backward(loss)
    np.testing.assert_allclose(x.grad, x.data, atol=1e-15)


def test_backward_rejects_non_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with Graph():
        y = mul(x, 2.0)
        with pytest.raises(ShapeError):
            backward(y)


def test_second_backward_rejected():
    x = Tensor(np.ones(3), requires_grad=True)
    with Graph():
        loss = sum_all(x)
        backward(loss)
        with pytest.raises(GraphError):
            backward(loss)


def test_gradients_accumulate_across_reuse():
    x = Tensor(np.array([2.0]), requires_grad=True)
    with Graph():
        # x used twice: d(x*x + 3x)/dx = 2x + 3
        loss = sum_all(concat([mul(x, x), mul(x, 3.0)], axis=0))
        backward(loss)
    np.testing.assert_allclose(x.grad, [2 * 2.0 + 3.0])


def test_grad_check_sum_is_exact():
    x = Tensor(np.random.default_rng(0).standard_normal(5))
    assert grad_check(sum_all, x) < 1e-9


def test_grad_check_sigmoid_matches_closed_form():
    rng = np.random.default_rng(1)
    x = Tensor(rng.standard_normal(4))
    err = grad_check(lambda t: sigmoid(sum_all(t)), x, h=1e-5)
    assert err < 1e-7
    # closed-form check of the analytic gradient itself
    x.requires_grad = True
    x.grad = None
    with Graph():
        backward(sigmoid(sum_all(x)))
    s = 1 / (1 + np.exp(-x.data.sum()))
    np.testing.assert_allclose(x.grad, np.full(4, s * (1 - s)), rtol=1e-12)


OPS = {
    "matmul2d": lambda rng: (
        lambda a, b: sum_all(mul(matmul(a, b), matmul(a, b))),
        [Tensor(rng.standard_normal((4, 3))), Tensor(rng.standard_normal((3, 5)))],
    ),
    "matmul3d": lambda rng: (
        lambda a, b: sum_all(matmul(a, b)),
        [Tensor(rng.standard_normal((2, 3, 4))), Tensor(rng.standard_normal((2, 4, 2)))],
    ),
    "matmul3d2d": lambda rng: (
        lambda a, b: sum_all(matmul(a, b)),
        [Tensor(rng.standard_normal((2, 3, 4))), Tensor(rng.standard_normal((4, 2)))],
    ),
    "token_matmul": lambda rng: (
        lambda x, w: sum_all(mul(token_matmul(x, w), token_matmul(x, w))),
        [Tensor(rng.standard_normal((2, 3, 4))), Tensor(rng.standard_normal((3, 4, 5)))],
    ),
    "softmax": lambda rng: (
        lambda x, w: sum_all(mul(softmax_rows(x), w)),
        [Tensor(rng.standard_normal((3, 5))), Tensor(rng.standard_normal((3, 5)))],
    ),
    "rms_norm": lambda rng: (
        lambda x, s: sum_all(mul(rms_norm(x, s), rms_norm(x, s))),
        [Tensor(rng.standard_normal((4, 6))), Tensor(rng.standard_normal(6))],
    ),
    "sigmoid_silu": lambda rng: (
        lambda x, y: sum_all(mul(sigmoid(x), silu(y))),
        [Tensor(rng.standard_normal((2, 3))), Tensor(rng.standard_normal((2, 3)))],
    ),
    "mean_sub": lambda rng: (
        lambda x, y: sum_all(mul(mean_axis(x, 1), mean_axis(sub(x, y), 1))),
        [Tensor(rng.standard_normal((3, 4, 2))), Tensor(rng.standard_normal((3, 4, 2)))],
    ),
    "reshape_transpose_narrow": lambda rng: (
        lambda x, y: sum_all(
            mul(narrow(transpose(reshape(x, (4, 6)), (1, 0)), 0, 1, 4), y)
        ),
        [Tensor(rng.standard_normal((2, 12))), Tensor(rng.standard_normal((4, 4)))],
    ),
    "concat_sum_axis": lambda rng: (
        lambda x, y: sum_all(mul(concat([x, y], axis=1), concat([y, x], axis=1))),
        [Tensor(rng.standard_normal((3, 2))), Tensor(rng.standard_normal((3, 2)))],
    ),
    "sum_axis": lambda rng: (
        lambda x, y: sum_all(mul(sum_axis(x, 1), y)),
        [Tensor(rng.standard_normal((3, 4, 2))), Tensor(rng.standard_normal((3, 2)))],
    ),
    "bce": lambda rng: (
        (lambda labels: lambda x: binary_cross_entropy(sigmoid(x), labels))(
            (rng.random(6) > 0.5).astype(float)
        ),
        [Tensor(rng.standard_normal(6))],
    ),
    "topk_vals": lambda rng: (
        lambda x: sum_all(mul(topk_rows(x, 3)[1], topk_rows(x, 3)[1])),
        [Tensor(rng.standard_normal((4, 8)))],
    ),
    "gather": lambda rng: (
        (lambda idx: lambda x: sum_all(mul(gather_rows(x, idx), 1.5)))(
            rng.integers(0, 5, (5, 2))
        ),
        [Tensor(rng.standard_normal((5, 3)))],
    ),
    "batched_gather": lambda rng: (
        (lambda idx: lambda x: sum_all(mul(batched_gather(x, idx), 0.7)))(
            rng.integers(0, 4, (2, 4, 3))
        ),
        [Tensor(rng.standard_normal((2, 4, 3)))],
    ),
    "embedding": lambda rng: (
        (lambda ids, valid: lambda t: sum_all(mul(embedding(t, ids, valid), 2.0)))(
            rng.integers(0, 6, (2, 5)), rng.random((2, 5)) > 0.3
        ),
        [Tensor(rng.standard_normal((6, 3)))],
    ),
    "masked_softmax": lambda rng: (
        (lambda mask, w: lambda x: sum_all(mul(masked_softmax_rows(x, mask), w)))(
            rng.random((2, 1, 6)) > 0.4, Tensor(rng.standard_normal((2, 3, 6)))
        ),
        [Tensor(rng.standard_normal((2, 3, 6)))],
    ),
}


@pytest.mark.parametrize("name", sorted(OPS))
@pytest.mark.parametrize("seed", range(20))
def test_every_op_passes_grad_check(name, seed):
    f, params = OPS[name](np.random.default_rng(1000 + seed))
    err = grad_check_many(lambda: f(*params), params, h=1e-5)
    assert err <= 1e-4, f"{name} seed {seed}: grad error {err:.3e}"
