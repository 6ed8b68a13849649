import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parkattn import attention as A
from parkattn import tensor as T
from parkattn.attention import AttentionWeights
from parkattn.tensor import Matrix, Tape

from gradcheck import numeric_grad, rel_error

RNG = np.random.default_rng(7)


def cross_weights(d, rng=RNG):
    return AttentionWeights(
        w_q=Matrix(rng.normal(size=(d, d))), w_v=Matrix(rng.normal(size=(d, d)))
    )


def full_weights(d, rng=RNG):
    return AttentionWeights(
        w_q=Matrix(rng.normal(size=(d, d))),
        w_v=Matrix(rng.normal(size=(d, d))),
        w_k=Matrix(rng.normal(size=(d, d))),
        w_o=Matrix(rng.normal(size=(d, d))),
    )


# ---------------------------------------------------------------------------
# scaled dot-product attention
# ---------------------------------------------------------------------------

def test_single_key_scores_exactly_one():
    q = Matrix(RNG.normal(size=(3, 2)))
    key = Matrix(RNG.normal(size=(1, 2)))
    v = Matrix(RNG.normal(size=(1, 4)))
    out = A.scaled_dot_attention(q, key, v, scale_dim=2)
    np.testing.assert_array_equal(out.scores.data, np.ones((3, 1)))
    np.testing.assert_array_equal(out.enriched.data, np.repeat(v.data, 3, axis=0))


def test_zero_query_gives_uniform_scores():
    key = Matrix(RNG.normal(size=(5, 3)))
    v = Matrix(RNG.normal(size=(5, 2)))
    out = A.scaled_dot_attention(Matrix(np.zeros((2, 3))), key, v, scale_dim=3)
    np.testing.assert_allclose(out.scores.data, np.full((2, 5), 0.2))
    np.testing.assert_allclose(
        out.enriched.data, np.repeat(v.data.mean(axis=0, keepdims=True), 2, axis=0)
    )


def test_two_by_two_closed_form():
    q = Matrix([[1.0, 0.0], [0.0, 1.0]])
    key = Matrix(np.eye(2))
    v = Matrix([[1.0, 2.0], [3.0, 4.0]])
    out = A.scaled_dot_attention(q, key, v, scale_dim=1)
    e = math.e
    hi, lo = e / (e + 1.0), 1.0 / (e + 1.0)
    np.testing.assert_allclose(out.scores.data, [[hi, lo], [lo, hi]], atol=1e-12)
    expected = np.array(
        [[hi * 1 + lo * 3, hi * 2 + lo * 4], [lo * 1 + hi * 3, lo * 2 + hi * 4]]
    )
    np.testing.assert_allclose(out.enriched.data, expected, atol=1e-12)


# ---------------------------------------------------------------------------
# embedding branch
# ---------------------------------------------------------------------------

def test_embedding_branch_hand_case_identity_projections():
    x_ssl = Matrix([[0.5, -1.0]])  # T=1, D=2
    x_inf = Matrix([[1.0, 0.0, -2.0]])  # F=3
    w = AttentionWeights(w_q=Matrix(np.eye(2)), w_v=Matrix(np.eye(2)))
    out = A.embedding_cross_attention(x_ssl, x_inf, w)
    for di in range(2):
        logits = x_ssl.data[0, di] * x_inf.data[0]
        e = np.exp(logits - logits.max())
        np.testing.assert_allclose(out.scores.data[di], e / e.sum(), atol=1e-12)
    np.testing.assert_allclose(out.enriched.data, x_ssl.data @ out.scores.data, atol=1e-12)
    assert out.enriched.shape == (1, 3)


def test_embedding_branch_zero_informed_gives_uniform():
    out = A.embedding_cross_attention(
        Matrix(RNG.normal(size=(4, 3))), Matrix(np.zeros((1, 5))), cross_weights(3)
    )
    np.testing.assert_allclose(out.scores.data, np.full((3, 5), 0.2), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.integers(1, 6), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_branch_shape_contract(t, d, f, seed):
    rng = np.random.default_rng(seed)
    x_ssl = Matrix(rng.normal(size=(t, d)))
    x_inf = Matrix(rng.normal(size=(1, f)))
    w = cross_weights(d, rng)
    emb = A.embedding_cross_attention(x_ssl, x_inf, w)
    assert emb.scores.shape == (d, f)
    assert emb.enriched.shape == (t, f)
    temp = A.temporal_cross_attention(x_ssl, x_inf, w)
    assert temp.scores.shape == (t, f)
    assert temp.enriched.shape == (d, f)
    for scores in (emb.scores, temp.scores):
        np.testing.assert_allclose(scores.data.sum(axis=1), np.ones(scores.rows), atol=1e-9)


def test_cross_weights_reject_wk_wo():
    w = full_weights(3)
    with pytest.raises(ValueError, match="w_k/w_o"):
        A.embedding_cross_attention(Matrix(RNG.normal(size=(2, 3))), Matrix([[1.0]]), w)


def test_empty_informed_rejected():
    with pytest.raises(Exception):
        A.embedding_cross_attention(
            Matrix(RNG.normal(size=(2, 3))), Matrix(np.zeros((1, 0))), cross_weights(3)
        )


# ---------------------------------------------------------------------------
# temporal branch
# ---------------------------------------------------------------------------

def test_temporal_branch_hand_case():
    # T=2, D=1, F=2, unit projections
    a, b = 0.7, -0.4
    u, v = 1.5, -0.5
    x_ssl = Matrix([[a], [b]])
    x_inf = Matrix([[u, v]])
    w = AttentionWeights(w_q=Matrix([[1.0]]), w_v=Matrix([[1.0]]))
    out = A.temporal_cross_attention(x_ssl, x_inf, w)
    expected_scores = np.empty((2, 2))
    for ti, qv in enumerate((a, b)):
        logits = np.array([qv * u, qv * v])  # scale sqrt(D)=1
        e = np.exp(logits - logits.max())
        expected_scores[ti] = e / e.sum()
    np.testing.assert_allclose(out.scores.data, expected_scores, atol=1e-12)
    np.testing.assert_allclose(
        out.enriched.data, np.array([[a, b]]) @ expected_scores, atol=1e-12
    )


def test_temporal_zero_informed_uniform():
    out = A.temporal_cross_attention(
        Matrix(RNG.normal(size=(4, 3))), Matrix(np.zeros((1, 6))), cross_weights(3)
    )
    np.testing.assert_allclose(out.scores.data, np.full((4, 6), 1.0 / 6.0), atol=1e-12)


def test_time_order_sensitivity():
    """Row permutations leave S_emb unchanged but permute S_temp rows."""
    rng = np.random.default_rng(3)
    x = rng.normal(size=(6, 4))
    x_inf = Matrix(rng.normal(size=(1, 5)))
    w = cross_weights(4, rng)
    perm = rng.permutation(6)
    emb = A.embedding_cross_attention(Matrix(x), x_inf, w)
    emb_p = A.embedding_cross_attention(Matrix(x[perm]), x_inf, w)
    np.testing.assert_allclose(emb.scores.data, emb_p.scores.data, atol=1e-12)
    temp = A.temporal_cross_attention(Matrix(x), x_inf, w)
    temp_p = A.temporal_cross_attention(Matrix(x[perm]), x_inf, w)
    np.testing.assert_allclose(temp.scores.data[perm], temp_p.scores.data, atol=1e-12)


def test_identity_key_path_is_exact_repeat(monkeypatch):
    """The informed features reach the scores as a bit-identical row repeat."""
    rng = np.random.default_rng(11)
    x = rng.normal(size=(5, 3))
    x_inf = rng.normal(size=(1, 4))
    w = cross_weights(3, rng)
    captured = []
    real_repeat = A.repeat_rows

    def spy(v, m, tape=None):
        out = real_repeat(v, m, tape)
        captured.append(out.data)
        return out

    monkeypatch.setattr(A, "repeat_rows", spy)
    emb = A.embedding_cross_attention(Matrix(x), Matrix(x_inf), w)
    temp = A.temporal_cross_attention(Matrix(x), Matrix(x_inf), w)
    assert len(captured) == 2
    np.testing.assert_array_equal(captured[0], np.repeat(x_inf, 5, axis=0))
    np.testing.assert_array_equal(captured[1], np.repeat(x_inf, 3, axis=0))
    # rescaling w_q changes the scores, but the key path stays the raw repeat
    w2 = AttentionWeights(w_q=Matrix(w.w_q.data * 3.0), w_v=w.w_v)
    emb2 = A.embedding_cross_attention(Matrix(x), Matrix(x_inf), w2)
    assert not np.allclose(emb.scores.data, emb2.scores.data)
    np.testing.assert_array_equal(captured[2], np.repeat(x_inf, 5, axis=0))
    assert temp.scores.shape == (5, 4)


def test_scale_mode_key_dim():
    rng = np.random.default_rng(5)
    x = Matrix(rng.normal(size=(4, 3)))
    x_inf = Matrix(rng.normal(size=(1, 6)))
    w = cross_weights(3, rng)
    contracted = A.embedding_cross_attention(x, x_inf, w, scale="contracted")
    key_dim = A.embedding_cross_attention(x, x_inf, w, scale="key_dim")
    logits = (x.data @ w.w_q.data).T @ np.repeat(x_inf.data, 4, axis=0)
    for out, denom in ((contracted, 4.0), (key_dim, 6.0)):
        z = logits / math.sqrt(denom)
        z = z - z.max(axis=1, keepdims=True)
        np.testing.assert_allclose(
            out.scores.data, np.exp(z) / np.exp(z).sum(axis=1, keepdims=True), atol=1e-12
        )


# ---------------------------------------------------------------------------
# self-attention
# ---------------------------------------------------------------------------

def test_self_attention_single_timestep():
    rng = np.random.default_rng(9)
    x = Matrix(rng.normal(size=(1, 4)))
    w = full_weights(4, rng)
    out = A.self_attention(x, w)
    np.testing.assert_array_equal(out.scores.data, [[1.0]])
    np.testing.assert_allclose(
        out.enriched.data, x.data @ w.w_v.data @ w.w_o.data, atol=1e-12
    )


def test_self_attention_permutation_equivariance():
    rng = np.random.default_rng(13)
    x = rng.normal(size=(5, 3))
    w = full_weights(3, rng)
    perm = rng.permutation(5)
    base = A.self_attention(Matrix(x), w)
    permuted = A.self_attention(Matrix(x[perm]), w)
    np.testing.assert_allclose(
        base.scores.data[np.ix_(perm, perm)], permuted.scores.data, atol=1e-12
    )
    np.testing.assert_allclose(base.enriched.data[perm], permuted.enriched.data, atol=1e-12)


def test_self_attention_two_by_two_closed_form():
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    w = AttentionWeights(
        w_q=Matrix(np.eye(2)), w_k=Matrix(np.eye(2)), w_v=Matrix(np.eye(2)), w_o=Matrix(np.eye(2))
    )
    out = A.self_attention(Matrix(x), w)
    s = 1.0 / math.sqrt(2.0)
    logits = x @ x.T * s
    z = np.exp(logits - logits.max(axis=1, keepdims=True))
    expected = z / z.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(out.scores.data, expected, atol=1e-12)
    np.testing.assert_allclose(out.enriched.data, expected @ x, atol=1e-12)


def test_self_attention_requires_wk_wo():
    with pytest.raises(ValueError, match="w_k and w_o"):
        A.self_attention(Matrix(RNG.normal(size=(2, 3))), cross_weights(3))


# ---------------------------------------------------------------------------
# gradients through the branches
# ---------------------------------------------------------------------------

def _branch_loss(op):
    def build(mats, tape):
        x_ssl, x_inf, wq, wv = mats
        w = AttentionWeights(w_q=wq, w_v=wv)
        out = op(x_ssl, x_inf, w, tape)
        pooled = T.mean_axis(out.enriched, "rows", tape)
        first_two = T.matmul(pooled, Matrix(proj), tape)
        return T.cross_entropy(first_two, 0, tape)

    return build


@pytest.mark.parametrize(
    "op", [A.embedding_cross_attention, A.temporal_cross_attention], ids=["emb", "temp"]
)
def test_cross_branch_gradients_match_fd(op):
    rng = np.random.default_rng(17)
    t, d, f = 4, 3, 5
    arrays = [
        rng.normal(size=(t, d)),
        rng.normal(size=(1, f)),
        rng.normal(size=(d, d)),
        rng.normal(size=(d, d)),
    ]
    global proj
    proj = rng.normal(size=(f, 2))
    build = _branch_loss(op)
    mats = [Matrix(a.copy(), requires_grad=True) for a in arrays]
    tape = Tape()
    loss = build(mats, tape)
    tape.backward(loss)

    def eval_fn(arrs):
        return build([Matrix(a) for a in arrs], None).item()

    for i, mat in enumerate(mats):
        num = numeric_grad(eval_fn, [a.copy() for a in arrays], i)
        assert rel_error(mat.grad, num) < 1e-4, f"operand {i}"
