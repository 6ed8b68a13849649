"""Single-head attention blocks: plain self-attention and two interpretable
cross-attention variants whose key path is the untransformed informed-feature
vector (identity key projection, no output projection).

Shapes follow a strict contract.  With an SSL sequence of T frames x D dims
and F informed features:

* embedding branch: scores D x F, enriched T x F
* temporal branch:  scores T x F, enriched D x F
* self-attention:   scores T x T, enriched T x D

Every score matrix is row-stochastic.  The softmax normalizes over the
informed-feature axis in both cross variants, so each SSL dimension (or each
frame) distributes unit attention mass over the interpretable features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .tensor import (
    Matrix,
    ShapeError,
    Tape,
    matmul,
    repeat_rows,
    scalar_scale,
    softmax_rows,
    transpose,
)

__all__ = [
    "AttentionWeights",
    "AttentionOutput",
    "scaled_dot_attention",
    "embedding_cross_attention",
    "temporal_cross_attention",
    "self_attention",
]

#: how the dot-product scale is chosen for the cross branches:
#: "contracted" uses the dimension summed over in Q*K (T for the embedding
#: branch, D for the temporal branch); "key_dim" uses F.
SCALE_MODES = ("contracted", "key_dim")


@dataclass
class AttentionWeights:
    """Projection matrices for one attention block.

    Cross-attention variants carry only w_q and w_v; the key path is the
    identity so the informed features reach the scores untransformed.  The
    self-attention baselines additionally carry w_k and w_o.
    """

    w_q: Matrix
    w_v: Matrix
    w_k: Optional[Matrix] = None
    w_o: Optional[Matrix] = None


@dataclass
class AttentionOutput:
    scores: Matrix
    enriched: Matrix


def _check_cross_weights(w: AttentionWeights, d: int, op: str) -> None:
    if w.w_k is not None or w.w_o is not None:
        raise ValueError(f"{op}: cross-attention weights must not carry w_k/w_o")
    if w.w_q.shape != (d, d) or w.w_v.shape != (d, d):
        raise ShapeError(
            f"{op}: expected DxD projections with D={d}, "
            f"got w_q={w.w_q.shape} w_v={w.w_v.shape}"
        )


def scaled_dot_attention(
    q: Matrix,
    key: Matrix,
    v: Matrix,
    scale_dim: int,
    tape: Optional[Tape] = None,
) -> AttentionOutput:
    """softmax(q @ key^T / sqrt(scale_dim)) applied to v."""
    if q.cols != key.cols:
        raise ShapeError(f"attention: q {q.shape} and key {key.shape} differ in inner dim")
    if key.rows != v.rows:
        raise ShapeError(f"attention: key {key.shape} and v {v.shape} differ in row count")
    if scale_dim < 1:
        raise ValueError(f"scale_dim must be >= 1, got {scale_dim}")
    logits = scalar_scale(matmul(q, transpose(key, tape), tape), 1.0 / math.sqrt(scale_dim), tape)
    scores = softmax_rows(logits, tape)
    return AttentionOutput(scores=scores, enriched=matmul(scores, v, tape))


def _check_cross_inputs(x_ssl: Matrix, x_inf: Matrix, op: str) -> None:
    if x_ssl.rows < 1 or x_ssl.cols < 1 or x_inf.cols < 1:
        raise ValueError(f"{op}: empty input, x_ssl={x_ssl.shape} x_inf={x_inf.shape}")
    if x_inf.rows != 1:
        raise ShapeError(f"{op}: informed features must be a 1xF row, got {x_inf.shape}")


def embedding_cross_attention(
    x_ssl: Matrix,
    x_inf: Matrix,
    w: AttentionWeights,
    tape: Optional[Tape] = None,
    scale: str = "contracted",
) -> AttentionOutput:
    """Relate each SSL embedding dimension to each informed feature.

    The informed row is repeated T times as the key, the query/value are
    linear projections of the SSL sequence, and the dot product contracts
    over time: scores = softmax(Q^T K / sqrt(T)), shape D x F.  Values are
    enriched as Z = V @ scores, shape T x F.
    """
    _check_cross_inputs(x_ssl, x_inf, "embedding_cross_attention")
    t = x_ssl.rows
    _check_cross_weights(w, x_ssl.cols, "embedding_cross_attention")
    q = matmul(x_ssl, w.w_q, tape)
    k = repeat_rows(x_inf, t, tape)
    v = matmul(x_ssl, w.w_v, tape)
    scale_dim = t if scale == "contracted" else x_inf.cols
    logits = scalar_scale(matmul(transpose(q, tape), k, tape), 1.0 / math.sqrt(scale_dim), tape)
    scores = softmax_rows(logits, tape)
    return AttentionOutput(scores=scores, enriched=matmul(v, scores, tape))


def temporal_cross_attention(
    x_ssl: Matrix,
    x_inf: Matrix,
    w: AttentionWeights,
    tape: Optional[Tape] = None,
    scale: str = "contracted",
) -> AttentionOutput:
    """Relate each time frame to each informed feature.

    The informed row is repeated D times as the key and the dot product
    contracts over the embedding dimension: scores = softmax(Q K / sqrt(D)),
    shape T x F.  Values are enriched as Z = V^T @ scores, shape D x F.
    """
    _check_cross_inputs(x_ssl, x_inf, "temporal_cross_attention")
    d = x_ssl.cols
    _check_cross_weights(w, d, "temporal_cross_attention")
    q = matmul(x_ssl, w.w_q, tape)
    k = repeat_rows(x_inf, d, tape)
    v = matmul(x_ssl, w.w_v, tape)
    scale_dim = d if scale == "contracted" else x_inf.cols
    logits = scalar_scale(matmul(q, k, tape), 1.0 / math.sqrt(scale_dim), tape)
    scores = softmax_rows(logits, tape)
    return AttentionOutput(scores=scores, enriched=matmul(transpose(v, tape), scores, tape))


def self_attention(
    x: Matrix,
    w: AttentionWeights,
    tape: Optional[Tape] = None,
) -> AttentionOutput:
    """Standard single-head self-attention with an output projection."""
    if w.w_k is None or w.w_o is None:
        raise ValueError("self_attention requires w_k and w_o")
    d = x.cols
    q = matmul(x, w.w_q, tape)
    k = matmul(x, w.w_k, tape)
    v = matmul(x, w.w_v, tape)
    att = scaled_dot_attention(q, k, v, d, tape)
    return AttentionOutput(scores=att.scores, enriched=matmul(att.enriched, w.w_o, tape))
