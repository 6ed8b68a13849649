"""Dense-matrix numerics with tape-based reverse-mode differentiation.

Just enough machinery for the attention architectures: 2-d matrices, a
dozen primitives, and a `Tape` that replays recorded ops in reverse.  Row
vectors are represented as 1xN matrices throughout.  No broadcasting beyond
`repeat_rows`; shape mismatches raise :class:`ShapeError` naming both shapes.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

__all__ = [
    "Matrix",
    "Tape",
    "ShapeError",
    "matmul",
    "transpose",
    "softmax_rows",
    "layer_norm",
    "swish",
    "mean_axis",
    "cross_entropy",
    "repeat_rows",
    "concat_vectors",
    "scalar_scale",
    "add_bias",
    "affine",
]


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class Matrix:
    """Immutable 2-d array of 64-bit (default) or 32-bit floats.

    `grad` is populated by :meth:`Tape.backward`; it is assigned fresh on
    every backward pass, never accumulated across passes.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False, dtype=np.float64):
        arr = np.asarray(data, dtype=dtype)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"Matrix must be 2-d, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a 1x1 matrix, got {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        return f"Matrix(shape={self.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Records primitive ops and replays them in exact reverse order.

    Backward never mutates forward values.  Gradients are collected in a
    per-call dict and then *assigned* to `Matrix.grad`, so running backward
    twice from the same tape yields identical gradients.
    """

    def __init__(self):
        self._records: list[tuple[Matrix, tuple[Matrix, ...], Callable]] = []

    def _record(self, out: Matrix, inputs: tuple[Matrix, ...], backward: Callable) -> None:
        self._records.append((out, inputs, backward))

    def backward(self, root: Matrix, seed: float = 1.0) -> dict[Matrix, np.ndarray]:
        """Propagate d(root)/d(node) to every recorded node.

        Returns a mapping for the nodes with requires_grad=True; all touched
        nodes also get their `.grad` attribute set.
        """
        grads: dict[int, np.ndarray] = {}
        nodes: dict[int, Matrix] = {}
        grads[id(root)] = np.full_like(root.data, seed)
        nodes[id(root)] = root
        for out, inputs, backward_fn in reversed(self._records):
            g = grads.get(id(out))
            if g is None:
                continue
            contributions = backward_fn(g)
            for inp, contrib in zip(inputs, contributions):
                if contrib is None:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + contrib
                else:
                    grads[key] = contrib
                    nodes[key] = inp
        result: dict[Matrix, np.ndarray] = {}
        for key, node in nodes.items():
            node.grad = grads[key]
            if node.requires_grad:
                result[node] = grads[key]
        return result


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def matmul(a: Matrix, b: Matrix, tape: Optional[Tape] = None) -> Matrix:
    """Standard matrix product a @ b."""
    if a.cols != b.rows:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    out = Matrix(a.data @ b.data)
    if tape is not None:
        a_data, b_data = a.data, b.data

        def backward(g):
            return g @ b_data.T, a_data.T @ g

        tape._record(out, (a, b), backward)
    return out


def transpose(x: Matrix, tape: Optional[Tape] = None) -> Matrix:
    out = Matrix(x.data.T.copy())
    if tape is not None:
        tape._record(out, (x,), lambda g: (g.T,))
    return out


def softmax_rows(x: Matrix, tape: Optional[Tape] = None) -> Matrix:
    """Row-wise softmax with per-row max subtraction for stability."""
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)
    out = Matrix(y)
    if tape is not None:

        def backward(g):
            dot = (g * y).sum(axis=1, keepdims=True)
            return (y * (g - dot),)

        tape._record(out, (x,), backward)
    return out


def layer_norm(
    x: Matrix,
    gain: Matrix,
    bias: Matrix,
    eps: float = 1e-5,
    tape: Optional[Tape] = None,
) -> Matrix:
    """Normalize a 1xN row to zero mean / unit variance, then scale and shift.

    Constant input is handled by eps (the normalized row is all zeros, so the
    output equals `bias`).
    """
    if x.rows != 1 or gain.shape != x.shape or bias.shape != x.shape:
        raise ShapeError(
            f"layer_norm expects matching 1xN operands, got x={x.shape} "
            f"gain={gain.shape} bias={bias.shape}"
        )
    mean = x.data.mean()
    var = ((x.data - mean) ** 2).mean()
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv
    out = Matrix(gain.data * xhat + bias.data)
    if tape is not None:
        gain_data = gain.data

        def backward(g):
            dgain = g * xhat
            dbias = g.copy()
            dxhat = g * gain_data
            dx = inv * (dxhat - dxhat.mean() - xhat * (dxhat * xhat).mean())
            return dx, dgain, dbias

        tape._record(out, (x, gain, bias), backward)
    return out


def swish(x: Matrix, tape: Optional[Tape] = None) -> Matrix:
    """Elementwise x * sigmoid(x)."""
    sig = _sigmoid(x.data)
    out = Matrix(x.data * sig)
    if tape is not None:
        x_data = x.data

        def backward(g):
            return (g * (sig + x_data * sig * (1.0 - sig)),)

        tape._record(out, (x,), backward)
    return out


def mean_axis(x: Matrix, axis: str, tape: Optional[Tape] = None) -> Matrix:
    """Mean along "rows" (down columns, 1xN result) or "cols" (1xM result)."""
    m, n = x.shape
    if axis == "rows":
        out = Matrix(x.data.mean(axis=0, keepdims=True))
        if tape is not None:
            tape._record(out, (x,), lambda g: (np.repeat(g / m, m, axis=0),))
    elif axis == "cols":
        out = Matrix(x.data.mean(axis=1).reshape(1, -1))
        if tape is not None:
            tape._record(out, (x,), lambda g: (np.repeat(g.T / n, n, axis=1),))
    else:
        raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")
    return out


def cross_entropy(logits: Matrix, label: int, tape: Optional[Tape] = None) -> Matrix:
    """-log softmax(logits)[label] via log-sum-exp; returns a 1x1 matrix."""
    if logits.rows != 1:
        raise ShapeError(f"cross_entropy expects a 1xK logits row, got {logits.shape}")
    if not 0 <= label < logits.cols:
        raise ValueError(f"label {label} out of range for {logits.cols} classes")
    row = logits.data[0]
    mx = row.max()
    lse = mx + np.log(np.exp(row - mx).sum())
    out = Matrix([[lse - row[label]]])
    if tape is not None:
        probs = np.exp(row - lse)

        def backward(g):
            d = probs.copy()
            d[label] -= 1.0
            return (g[0, 0] * d.reshape(1, -1),)

        tape._record(out, (logits,), backward)
    return out


def repeat_rows(v: Matrix, m: int, tape: Optional[Tape] = None) -> Matrix:
    """Stack the 1xN row vector `v` m times into an MxN matrix."""
    if v.rows != 1:
        raise ShapeError(f"repeat_rows expects a 1xN row vector, got {v.shape}")
    if m < 1:
        raise ShapeError(f"repeat_rows needs m >= 1, got {m}")
    out = Matrix(np.repeat(v.data, m, axis=0))
    if tape is not None:
        tape._record(out, (v,), lambda g: (g.sum(axis=0, keepdims=True),))
    return out


def concat_vectors(a: Matrix, b: Matrix, tape: Optional[Tape] = None) -> Matrix:
    if a.rows != 1 or b.rows != 1:
        raise ShapeError(f"concat_vectors expects row vectors, got {a.shape}, {b.shape}")
    split = a.cols
    out = Matrix(np.concatenate([a.data, b.data], axis=1))
    if tape is not None:
        tape._record(out, (a, b), lambda g: (g[:, :split], g[:, split:]))
    return out


def scalar_scale(x: Matrix, s: float, tape: Optional[Tape] = None) -> Matrix:
    out = Matrix(x.data * s)
    if tape is not None:
        tape._record(out, (x,), lambda g: (g * s,))
    return out


def add_bias(x: Matrix, b: Matrix, tape: Optional[Tape] = None) -> Matrix:
    """Add the 1xN row `b` to every row of x."""
    if b.rows != 1 or b.cols != x.cols:
        raise ShapeError(f"add_bias: bias {b.shape} does not match matrix {x.shape}")
    out = Matrix(x.data + b.data)
    if tape is not None:
        tape._record(out, (x, b), lambda g: (g, g.sum(axis=0, keepdims=True)))
    return out


def affine(x: Matrix, gain: Matrix, bias: Matrix, tape: Optional[Tape] = None) -> Matrix:
    """Elementwise per-column scale and shift: x * gain + bias (row-wise)."""
    if gain.rows != 1 or gain.cols != x.cols or bias.shape != gain.shape:
        raise ShapeError(
            f"affine: gain {gain.shape} / bias {bias.shape} do not match matrix {x.shape}"
        )
    out = Matrix(x.data * gain.data + bias.data)
    if tape is not None:
        x_data, gain_data = x.data, gain.data

        def backward(g):
            return (
                g * gain_data,
                (g * x_data).sum(axis=0, keepdims=True),
                g.sum(axis=0, keepdims=True),
            )

        tape._record(out, (x, gain, bias), backward)
    return out
