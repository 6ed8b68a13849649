"""The three classifier architectures and their parameter management.

* ``cross_attn`` - dual-branch cross-attention over an SSL sequence and an
  informed-feature row, pooled, concatenated and classified.
* ``self_ssl``  - self-attention over the SSL sequence alone.
* ``self_inf``  - linear projection of the informed row to a length-1
  sequence, then the same self-attention/classification stack (the attention
  over one timestep collapses to a linear map).

Initialization draws every projection matrix from
uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) with a seeded PCG64 stream, so a
given seed always yields bit-identical parameters.  Gain vectors start at 1,
biases at 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .attention import (
    AttentionOutput,
    AttentionWeights,
    embedding_cross_attention,
    self_attention,
    temporal_cross_attention,
)
from .data.sfm1 import read_sfm1_bytes, write_sfm1_bytes
from .tensor import (
    Matrix,
    Tape,
    add_bias,
    affine,
    concat_vectors,
    layer_norm,
    matmul,
    mean_axis,
    swish,
)

__all__ = [
    "VARIANTS",
    "ModelParams",
    "Prediction",
    "param_shapes",
    "count_params",
    "init_params",
    "forward",
    "forward_cross_attn",
    "forward_self_ssl",
    "forward_self_inf",
    "save_checkpoint",
    "load_checkpoint",
]

VARIANTS = ("cross_attn", "self_ssl", "self_inf")

LABEL_HC = 0
LABEL_PD = 1

CHECKPOINT_FORMAT = "parkattn-checkpoint"


def param_shapes(variant: str, d: int, f: int) -> dict[str, tuple[tuple[int, int], Optional[int]]]:
    """Canonical parameter order: name -> ((rows, cols), fan_in or None).

    fan_in None marks gain/bias vectors initialized to constants (gains 1,
    biases 0) rather than drawn from the RNG.
    """
    if d < 1 or f < 1:
        raise ValueError(f"need d, f >= 1, got d={d} f={f}")
    if variant == "cross_attn":
        h = 2 * f
        return {
            "wq_emb": ((d, d), d),
            "wv_emb": ((d, d), d),
            "wq_temp": ((d, d), d),
            "wv_temp": ((d, d), d),
            "ln_gain": ((1, h), None),
            "ln_bias": ((1, h), None),
            "head_gain": ((1, h), None),
            "head_bias": ((1, h), None),
            "w_cls": ((h, 2), h),
            "b_cls": ((1, 2), None),
        }
    if variant == "self_ssl":
        return {
            "wq": ((d, d), d),
            "wk": ((d, d), d),
            "wv": ((d, d), d),
            "wo": ((d, d), d),
            "ln_gain": ((1, d), None),
            "ln_bias": ((1, d), None),
            "w_cls": ((d, 2), d),
            "b_cls": ((1, 2), None),
        }
    if variant == "self_inf":
        return {
            "proj": ((f, d), f),
            "wq": ((d, d), d),
            "wk": ((d, d), d),
            "wv": ((d, d), d),
            "wo": ((d, d), d),
            "ln_gain": ((1, d), None),
            "ln_bias": ((1, d), None),
            "w_cls": ((d, 2), d),
            "b_cls": ((1, 2), None),
        }
    raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")


def count_params(variant: str, d: int, f: int) -> int:
    return sum(r * c for (r, c), _ in param_shapes(variant, d, f).values())


@dataclass
class ModelParams:
    variant: str
    d: int
    f: int
    seed: int
    weights: dict[str, Matrix] = field(repr=False)

    def named(self):
        return self.weights.items()


@dataclass
class Prediction:
    logits: np.ndarray  # shape (2,)
    predicted_label: int
    attention: dict[str, AttentionOutput]
    logits_matrix: Matrix = field(repr=False)
    fused: Optional[np.ndarray] = None  # cross_attn: the pooled concat fed to the head


def init_params(variant: str, d: int, f: int, seed: int) -> ModelParams:
    shapes = param_shapes(variant, d, f)
    rng = np.random.default_rng(np.random.PCG64(seed))
    weights: dict[str, Matrix] = {}
    for name, ((rows, cols), fan_in) in shapes.items():
        if fan_in is not None:
            lim = np.sqrt(1.0 / fan_in)
            data = rng.uniform(-lim, lim, size=(rows, cols))
        elif name.endswith("gain"):
            data = np.ones((rows, cols))
        else:
            data = np.zeros((rows, cols))
        weights[name] = Matrix(data, requires_grad=True)
    return ModelParams(variant=variant, d=d, f=f, seed=seed, weights=weights)


def _classify(
    pooled: Matrix,
    p: ModelParams,
    tape: Optional[Tape],
    with_affine: bool,
) -> Matrix:
    w = p.weights
    h = swish(layer_norm(pooled, w["ln_gain"], w["ln_bias"], tape=tape), tape)
    if with_affine:
        h = affine(h, w["head_gain"], w["head_bias"], tape)
    return add_bias(matmul(h, w["w_cls"], tape), w["b_cls"], tape)


def _prediction(
    logits: Matrix,
    attention: dict[str, AttentionOutput],
    fused: Optional[np.ndarray] = None,
) -> Prediction:
    row = logits.data[0]
    return Prediction(
        logits=row.copy(),
        predicted_label=int(np.argmax(row)),
        attention=attention,
        logits_matrix=logits,
        fused=fused,
    )


def forward_cross_attn(
    p: ModelParams,
    x_ssl: Matrix,
    x_inf: Matrix,
    tape: Optional[Tape] = None,
    scale: str = "contracted",
) -> Prediction:
    if p.variant != "cross_attn":
        raise ValueError(f"params are for {p.variant!r}")
    if x_inf.cols != p.f:
        raise ValueError(f"informed row has {x_inf.cols} features, model expects {p.f}")
    if x_ssl.cols != p.d:
        raise ValueError(f"SSL frames have {x_ssl.cols} dims, model expects {p.d}")
    w = p.weights
    emb = embedding_cross_attention(
        x_ssl, x_inf, AttentionWeights(w_q=w["wq_emb"], w_v=w["wv_emb"]), tape, scale
    )
    temp = temporal_cross_attention(
        x_ssl, x_inf, AttentionWeights(w_q=w["wq_temp"], w_v=w["wv_temp"]), tape, scale
    )
    z_emb = mean_axis(emb.enriched, "rows", tape)  # mean over T -> 1xF
    z_temp = mean_axis(temp.enriched, "rows", tape)  # mean over D -> 1xF
    z = concat_vectors(z_emb, z_temp, tape)
    logits = _classify(z, p, tape, with_affine=True)
    return _prediction(logits, {"embedding": emb, "temporal": temp}, fused=z.data[0].copy())


def forward_self_ssl(
    p: ModelParams,
    x_ssl: Matrix,
    tape: Optional[Tape] = None,
) -> Prediction:
    if p.variant != "self_ssl":
        raise ValueError(f"params are for {p.variant!r}")
    if x_ssl.cols != p.d:
        raise ValueError(f"SSL frames have {x_ssl.cols} dims, model expects {p.d}")
    w = p.weights
    att = self_attention(
        x_ssl, AttentionWeights(w_q=w["wq"], w_v=w["wv"], w_k=w["wk"], w_o=w["wo"]), tape
    )
    pooled = mean_axis(att.enriched, "rows", tape)
    logits = _classify(pooled, p, tape, with_affine=False)
    return _prediction(logits, {"self": att})


def forward_self_inf(
    p: ModelParams,
    x_inf: Matrix,
    tape: Optional[Tape] = None,
) -> Prediction:
    if p.variant != "self_inf":
        raise ValueError(f"params are for {p.variant!r}")
    if x_inf.cols != p.f:
        raise ValueError(f"informed row has {x_inf.cols} features, model expects {p.f}")
    w = p.weights
    latent = matmul(x_inf, w["proj"], tape)  # 1xD sequence of length one
    att = self_attention(
        latent, AttentionWeights(w_q=w["wq"], w_v=w["wv"], w_k=w["wk"], w_o=w["wo"]), tape
    )
    pooled = mean_axis(att.enriched, "rows", tape)
    logits = _classify(pooled, p, tape, with_affine=False)
    return _prediction(logits, {"self": att})


def forward(
    p: ModelParams,
    x_ssl: Optional[Matrix] = None,
    x_inf: Optional[Matrix] = None,
    tape: Optional[Tape] = None,
    scale: str = "contracted",
) -> Prediction:
    """Variant dispatch used by the training loop."""
    if p.variant == "cross_attn":
        return forward_cross_attn(p, x_ssl, x_inf, tape, scale)
    if p.variant == "self_ssl":
        return forward_self_ssl(p, x_ssl, tape)
    return forward_self_inf(p, x_inf, tape)


def save_checkpoint(p: ModelParams, path, schema_hash: str = "") -> None:
    """One JSON header line followed by one SFM1 blob per parameter."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": 1,
        "variant": p.variant,
        "d": p.d,
        "f": p.f,
        "seed": p.seed,
        "schema_hash": schema_hash,
        "params": list(p.weights.keys()),
    }
    chunks = [json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"), b"\n"]
    for name, mat in p.weights.items():
        chunks.append(write_sfm1_bytes(mat.data, {"name": name}))
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path) -> tuple[ModelParams, str]:
    blob = Path(path).read_bytes()
    nl = blob.index(b"\n")
    header = json.loads(blob[:nl].decode("utf-8"))
    if header.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    shapes = param_shapes(header["variant"], header["d"], header["f"])
    if list(shapes.keys()) != header["params"]:
        raise ValueError(f"{path}: parameter list does not match variant layout")
    weights: dict[str, Matrix] = {}
    offset = nl + 1
    for name in header["params"]:
        data, meta, offset = read_sfm1_bytes(blob, offset)
        if meta.get("name") != name:
            raise ValueError(f"{path}: expected parameter {name!r}, found {meta.get('name')!r}")
        if data.shape != shapes[name][0]:
            raise ValueError(f"{path}: {name} has shape {data.shape}, expected {shapes[name][0]}")
        weights[name] = Matrix(data, requires_grad=True)
    params = ModelParams(
        variant=header["variant"],
        d=header["d"],
        f=header["f"],
        seed=header["seed"],
        weights=weights,
    )
    return params, header.get("schema_hash", "")
