import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parkattn import tensor as T
from parkattn.tensor import Matrix, ShapeError, Tape

from gradcheck import numeric_grad, rel_error

RNG = np.random.default_rng(42)


def rand(m, n):
    return RNG.normal(size=(m, n))


# ---------------------------------------------------------------------------
# forward examples
# ---------------------------------------------------------------------------

def test_matmul_identity():
    b = Matrix(rand(2, 3))
    out = T.matmul(Matrix(np.eye(2)), b)
    np.testing.assert_array_equal(out.data, b.data)


def test_matmul_hand_case():
    out = T.matmul(Matrix([[1.0, 2.0], [3.0, 4.0]]), Matrix([[1.0], [1.0]]))
    np.testing.assert_allclose(out.data, [[3.0], [7.0]])


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
        T.matmul(Matrix(rand(2, 3)), Matrix(rand(2, 2)))


def test_softmax_uniform_and_single():
    out = T.softmax_rows(Matrix(np.zeros((1, 4))))
    np.testing.assert_allclose(out.data, np.full((1, 4), 0.25))
    out1 = T.softmax_rows(Matrix([[3.7]]))
    np.testing.assert_allclose(out1.data, [[1.0]])


def test_softmax_closed_form():
    out = T.softmax_rows(Matrix([[0.0, math.log(2.0)]]))
    np.testing.assert_allclose(out.data, [[1.0 / 3.0, 2.0 / 3.0]], atol=1e-15)


def test_softmax_rows_sum_to_one_and_shift_invariant():
    x = rand(6, 9)
    out = T.softmax_rows(Matrix(x))
    np.testing.assert_allclose(out.data.sum(axis=1), np.ones(6), atol=1e-9)
    shifted = T.softmax_rows(Matrix(x + 123.456))
    np.testing.assert_allclose(out.data, shifted.data, atol=1e-9)


def test_layer_norm_constant_input_gives_bias():
    x = Matrix(np.full((1, 5), 3.3))
    gain = Matrix(np.ones((1, 5)))
    bias = Matrix(np.full((1, 5), 0.7))
    out = T.layer_norm(x, gain, bias)
    np.testing.assert_allclose(out.data, np.full((1, 5), 0.7))


def test_layer_norm_two_point_closed_form():
    out = T.layer_norm(
        Matrix([[1.0, 3.0]]), Matrix(np.ones((1, 2))), Matrix(np.zeros((1, 2))), eps=1e-12
    )
    np.testing.assert_allclose(out.data, [[-1.0, 1.0]], atol=1e-6)


def test_swish_values():
    np.testing.assert_allclose(T.swish(Matrix([[0.0]])).data, [[0.0]])
    np.testing.assert_allclose(T.swish(Matrix([[1.0]])).data, [[1.0 / (1.0 + math.exp(-1.0))]])
    big = T.swish(Matrix([[40.0, -40.0]])).data
    assert big[0, 0] == pytest.approx(40.0, abs=1e-12)
    assert big[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_mean_axis():
    x = Matrix([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(T.mean_axis(x, "rows").data, [[2.0, 3.0]])
    np.testing.assert_allclose(T.mean_axis(x, "cols").data, [[1.5, 3.5]])
    row = Matrix([[5.0, 6.0, 7.0]])
    np.testing.assert_allclose(T.mean_axis(row, "rows").data, row.data)
    soft = T.softmax_rows(Matrix(rand(5, 4)))
    m = T.mean_axis(soft, "rows").data
    assert np.all((m > 0) & (m < 1))


def test_cross_entropy_values():
    assert T.cross_entropy(Matrix([[0.0, 0.0]]), 0).item() == pytest.approx(math.log(2.0))
    assert T.cross_entropy(Matrix([[0.0, 0.0]]), 1).item() == pytest.approx(math.log(2.0))
    tiny = T.cross_entropy(Matrix([[10.0, -10.0]]), 0).item()
    assert tiny == pytest.approx(math.log1p(math.exp(-20.0)), rel=1e-9)
    assert tiny < 1e-8


def test_cross_entropy_gradient_identity():
    logits = Matrix(rand(1, 2), requires_grad=True)
    tape = Tape()
    loss = T.cross_entropy(logits, 1, tape)
    tape.backward(loss)
    probs = np.exp(logits.data[0]) / np.exp(logits.data[0]).sum()
    expected = probs - np.array([0.0, 1.0])
    np.testing.assert_allclose(logits.grad[0], expected, atol=1e-12)


def test_repeat_concat_scale_bias_affine_forward():
    v = Matrix([[1.0, 2.0]])
    np.testing.assert_array_equal(T.repeat_rows(v, 3).data, [[1, 2]] * 3)
    np.testing.assert_array_equal(
        T.concat_vectors(v, Matrix([[9.0]])).data, [[1.0, 2.0, 9.0]]
    )
    np.testing.assert_allclose(T.scalar_scale(v, -2.0).data, [[-2.0, -4.0]])
    x = Matrix([[1.0, 1.0], [2.0, 2.0]])
    np.testing.assert_allclose(T.add_bias(x, v).data, [[2.0, 3.0], [3.0, 4.0]])
    np.testing.assert_allclose(
        T.affine(x, v, Matrix([[10.0, 0.0]])).data, [[11.0, 2.0], [12.0, 4.0]]
    )


def test_transpose():
    x = Matrix([[1.0, 2.0, 3.0]])
    np.testing.assert_array_equal(T.transpose(x).data, [[1.0], [2.0], [3.0]])


# ---------------------------------------------------------------------------
# gradient checks against central finite differences
# ---------------------------------------------------------------------------

def _check_grad(build, arrays, tol=1e-6):
    """build(list of Matrix) -> scalar-producing loss graph on a tape."""
    mats = [Matrix(a.copy(), requires_grad=True) for a in arrays]
    tape = Tape()
    loss = build(mats, tape)
    tape.backward(loss)

    def eval_fn(arrs):
        ms = [Matrix(a) for a in arrs]
        return build(ms, None).item()

    for i, mat in enumerate(mats):
        num = numeric_grad(eval_fn, [a.copy() for a in arrays], i)
        assert rel_error(mat.grad, num) < tol, f"input {i}: analytic vs numeric gradient"


def _sum_all(x, tape):
    return T.mean_axis(T.mean_axis(x, "rows", tape), "cols", tape)


def test_matmul_gradient():
    _check_grad(
        lambda m, tp: _sum_all(T.matmul(m[0], m[1], tp), tp),
        [rand(3, 4), rand(4, 2)],
    )


def test_softmax_gradient():
    w = rand(4, 3)

    def build(m, tp):
        return _sum_all(T.matmul(T.softmax_rows(m[0], tp), Matrix(w), tp), tp)

    _check_grad(build, [rand(3, 4)], tol=1e-5)


def test_layer_norm_gradient():
    w = rand(1, 5)

    def build(m, tp):
        out = T.layer_norm(m[0], m[1], m[2], tape=tp)
        return _sum_all(T.affine(out, Matrix(w), Matrix(np.zeros((1, 5))), tp), tp)

    _check_grad(build, [rand(1, 5), rand(1, 5) + 1.5, rand(1, 5)], tol=1e-5)


def test_swish_gradient():
    _check_grad(lambda m, tp: _sum_all(T.swish(m[0], tp), tp), [rand(3, 4)])


def test_cross_entropy_gradient_vs_fd():
    _check_grad(lambda m, tp: T.cross_entropy(m[0], 1, tp), [rand(1, 4)])


def test_composite_pipeline_gradient():
    """repeat/concat/transpose/add_bias/scalar_scale all in one graph."""

    def build(m, tp):
        rep = T.repeat_rows(m[0], 3, tp)
        prod = T.matmul(T.transpose(m[1], tp), rep, tp)
        biased = T.add_bias(prod, m[2], tp)
        row = T.mean_axis(T.scalar_scale(biased, 0.5, tp), "rows", tp)
        both = T.concat_vectors(row, m[0], tp)
        return T.cross_entropy(T.matmul(both, Matrix(w_out), tp), 0, tp)

    w_out = rand(8, 2)
    _check_grad(build, [rand(1, 4), rand(3, 4), rand(1, 4)], tol=1e-5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_op_chains_gradcheck(seed):
    """Property: reverse-mode gradients match finite differences (<1e-4)."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(4, 3))

    def build(m, tp):
        y = T.matmul(m[0], m[1], tp)
        y = T.softmax_rows(y, tp)
        y = T.swish(y, tp)
        row = T.mean_axis(y, "cols", tp)
        return T.cross_entropy(T.matmul(row, Matrix(w), tp), 1, tp)

    w = rng.normal(size=(3, 2))
    _check_grad(build, [a, b], tol=1e-4)


# ---------------------------------------------------------------------------
# tape semantics
# ---------------------------------------------------------------------------

def test_backward_does_not_mutate_forward_values():
    x = Matrix(rand(2, 3), requires_grad=True)
    tape = Tape()
    y = T.softmax_rows(x, tape)
    snapshot = y.data.copy()
    loss = _sum_all(y, tape)
    tape.backward(loss)
    np.testing.assert_array_equal(y.data, snapshot)


def test_double_backward_identical():
    x = Matrix(rand(2, 3), requires_grad=True)
    tape = Tape()
    loss = T.cross_entropy(T.mean_axis(T.swish(x, tape), "rows", tape), 0, tape)
    tape.backward(loss)
    first = x.grad.copy()
    tape.backward(loss)
    np.testing.assert_array_equal(x.grad, first)


def test_fanout_accumulates_consumer_contributions():
    x = Matrix(np.array([[1.0, 2.0]]), requires_grad=True)
    tape = Tape()
    # x feeds two consumers; d/dx of sum(x*2 + x*3) = 5
    a = T.scalar_scale(x, 2.0, tape)
    b = T.scalar_scale(x, 3.0, tape)
    out = T.concat_vectors(a, b, tape)
    total = T.scalar_scale(T.mean_axis(out, "cols", tape), 4.0, tape)  # mean over 4 entries
    tape.backward(total)
    np.testing.assert_allclose(x.grad, np.array([[5.0, 5.0]]))


def test_matmul_associativity():
    a, b, c = rand(3, 4), rand(4, 5), rand(5, 2)
    left = T.matmul(T.matmul(Matrix(a), Matrix(b)), Matrix(c)).data
    right = T.matmul(Matrix(a), T.matmul(Matrix(b), Matrix(c))).data
    np.testing.assert_allclose(left, right, atol=1e-9)


def test_matrix_rejects_non_2d():
    with pytest.raises(ShapeError):
        Matrix(np.zeros((2, 2, 2)))
