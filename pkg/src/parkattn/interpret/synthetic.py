"""Desk-scale synthetic corpus with a planted discriminative feature.

Each speaker gets an informed vector drawn from N(0,1)^F; speakers labeled
PD are shifted by `effect_size` on one planted feature.  SSL matrices are
combinations of a shared random basis: a constant direction, a direction
whose coefficient couples to the planted feature (the coupling strength and
an additional offset grow with the effect size and differ by group, so the
SSL correlation with the planted feature separates the groups), and two
per-frame noise directions.  With effect_size = 0 the two groups' generating
distributions are identical, so labels are statistically unlearnable.

Output is a JSON-Lines manifest plus one SFM1 pair per utterance; bytes are
deterministic for a given config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..data.sfm1 import write_sfm1
from ..features.schema import InformedFeatureSchema, default_schema


@dataclass
class SynthConfig:
    n_speakers: int = 40
    frames: int = 50
    ssl_dim: int = 64
    planted_feature_index: int = 5
    effect_size: float = 3.0
    seed: int = 0
    utterances_per_speaker: int = 4
    task: str = "MONOLOGUE"
    n_datasets: int = 1

    def __post_init__(self):
        if self.n_speakers % 2:
            raise ValueError("n_speakers must be even (balanced labels)")
        if self.n_speakers < 2 or self.frames < 1 or self.ssl_dim < 4:
            raise ValueError("corpus too small: need speakers >= 2, frames >= 1, ssl_dim >= 4")


def generate_synthetic(
    config: SynthConfig,
    out_dir,
    schema: InformedFeatureSchema | None = None,
) -> Path:
    """Write the corpus under `out_dir`; returns the manifest path."""
    schema = schema or default_schema()
    f_count = schema.size
    if not 0 <= config.planted_feature_index < f_count:
        raise ValueError(
            f"planted index {config.planted_feature_index} outside schema of {f_count}"
        )
    out_dir = Path(out_dir)
    (out_dir / "features").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.PCG64(config.seed))

    basis = rng.normal(size=(4, config.ssl_dim))
    basis /= np.linalg.norm(basis, axis=1, keepdims=True)

    lines = []
    planted = config.planted_feature_index
    effect = config.effect_size
    for s in range(config.n_speakers):
        label = 1 if s >= config.n_speakers // 2 else 0
        speaker_id = f"spk{s:03d}"
        dataset_id = f"synth{s % config.n_datasets}"
        v_speaker = rng.normal(size=f_count)
        if label == 1:
            v_speaker[planted] += effect
        couple = 0.5 * (1.0 + effect / 3.0) if label == 1 else 0.5
        offset = effect / 4.0 if label == 1 else 0.0
        for u in range(config.utterances_per_speaker):
            v = v_speaker + 0.1 * rng.normal(size=f_count)
            proj = v_speaker[planted] * couple / 2.0 + offset
            coeffs = rng.normal(size=(config.frames, 2))
            x = (
                basis[0][None, :]
                + proj * basis[1][None, :]
                + coeffs[:, :1] * basis[2][None, :]
                + coeffs[:, 1:] * basis[3][None, :]
                + 0.1 * rng.normal(size=(config.frames, config.ssl_dim))
            )
            utt_id = f"{speaker_id}_u{u}"
            ssl_rel = f"features/{utt_id}.ssl.sfm1"
            inf_rel = f"features/{utt_id}.inf.sfm1"
            write_sfm1(x, {"kind": "ssl", "utterance": utt_id}, out_dir / ssl_rel)
            write_sfm1(
                v.reshape(1, -1),
                {"kind": "informed", "schema_hash": schema.hash()},
                out_dir / inf_rel,
            )
            lines.append(
                {
                    "utterance_id": utt_id,
                    "speaker_id": speaker_id,
                    "dataset_id": dataset_id,
                    "task": config.task,
                    "label": "PD" if label else "HC",
                    "ssl_path": ssl_rel,
                    "inf_path": inf_rel,
                }
            )
    manifest = out_dir / "manifest.jsonl"
    manifest.write_text(
        "".join(json.dumps(obj, sort_keys=True) + "\n" for obj in lines),
        encoding="utf-8",
    )
    (out_dir / "schema.json").write_text(schema.to_json(), encoding="utf-8")
    return manifest
