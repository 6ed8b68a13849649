"""Run the frozen encoder over a manifest and dump one layer's hidden states.

The encoder is the 24-layer, 300M-parameter multilingual Wav2Vec2-XLSR model
used purely as a frozen feature extractor: batch of one, eval mode, no
gradients, no padding.  "Layer N" counts transformer blocks 1-indexed, so
layer 7 is the output of block 7 (index 7 of `hidden_states`, whose entry 0
is the pre-transformer projection); the choice is recorded in each file's
metadata.  Inputs must already be conditioned mono 16 kHz WAVs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .sfm1 import write_sfm1

DEFAULT_MODEL = "facebook/wav2vec2-xls-r-300m"
EXPECTED_RATE = 16000
HOP_S = 0.02


@dataclass
class ExtractionJob:
    manifest_path: Path
    out_dir: Path
    layer: int = 7  # 1-indexed transformer block
    model_id: str = DEFAULT_MODEL
    audio_dir: Path | None = None  # default: WAVs sit next to the manifest


@dataclass
class ExtractionReport:
    written: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _load_wav(path: Path) -> np.ndarray:
    rate, data = wavfile.read(path)
    if rate != EXPECTED_RATE:
        raise ValueError(f"{path}: expected conditioned {EXPECTED_RATE} Hz audio, got {rate} Hz")
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float32)
    else:
        raise ValueError(f"{path}: unsupported WAV sample format {data.dtype}")
    if samples.size < EXPECTED_RATE // 10:
        raise ValueError(f"{path}: audio shorter than 0.1 s")
    return samples


def load_encoder(model_id: str):
    """Load the frozen encoder; import deferred so --help works without torch."""
    import torch
    from transformers import Wav2Vec2Model

    torch.set_num_threads(1)  # keeps repeat extractions bit-identical
    model = Wav2Vec2Model.from_pretrained(model_id)
    model.eval()
    depth = model.config.num_hidden_layers
    return model, depth


def extract(job: ExtractionJob) -> ExtractionReport:
    import torch

    from .manifest import load_entries

    report = ExtractionReport()
    entries = load_entries(job.manifest_path)
    if not entries:
        return report
    try:
        model, depth = load_encoder(job.model_id)
    except Exception as exc:
        for entry in entries:
            report.failures.append(
                {"utterance_id": entry.utterance_id, "error": f"model unavailable: {exc}"}
            )
        return report
    if not 1 <= job.layer <= depth:
        raise ValueError(f"layer {job.layer} outside encoder depth 1..{depth}")
    job.out_dir.mkdir(parents=True, exist_ok=True)
    for entry in entries:
        out_path = job.out_dir / f"{entry.utterance_id}.ssl.sfm1"
        try:
            samples = _load_wav(_resolve_audio(entry, job))
            normalized = (samples - samples.mean()) / np.sqrt(samples.var() + 1e-7)
            with torch.no_grad():
                out = model(
                    torch.from_numpy(normalized).unsqueeze(0),
                    output_hidden_states=True,
                )
            hidden = out.hidden_states[job.layer][0].numpy().astype(np.float32)
            write_sfm1(
                hidden,
                {
                    "layer": job.layer,
                    "layer_indexing": "1-indexed transformer blocks",
                    "hop_s": HOP_S,
                    "model": job.model_id,
                    "utterance": entry.utterance_id,
                },
                out_path,
            )
            report.written.append(
                {
                    "utterance_id": entry.utterance_id,
                    "path": str(out_path),
                    "rows": int(hidden.shape[0]),
                    "cols": int(hidden.shape[1]),
                }
            )
        except Exception as exc:
            report.failures.append({"utterance_id": entry.utterance_id, "error": str(exc)})
    index = {
        "model": job.model_id,
        "layer": job.layer,
        "hop_s": HOP_S,
        "written": report.written,
        "failures": report.failures,
    }
    (job.out_dir / "index.json").write_text(
        json.dumps(index, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return report


def _resolve_audio(entry, job: ExtractionJob) -> Path:
    """Audio lives next to the manifest as <utterance_id>.wav unless an
    explicit audio directory was configured on the job."""
    base = Path(job.audio_dir) if job.audio_dir else Path(job.manifest_path).parent
    return base / f"{entry.utterance_id}.wav"
