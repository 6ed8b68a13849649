"""Rebuild attention maps from a finished run directory and emit reports.

A run directory (written by the train/crosslingual commands) carries the
run manifest, the result JSON and one checkpoint per (fold, seed).  Reports
follow the evaluation convention: pick the best seed by mean test F1, rerun
the forward pass on each fold's test utterances with that fold's checkpoint,
and analyze the attention of (by default) correctly predicted samples only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..data.manifest import load_alignments, load_manifest
from ..data.splits import make_cross_lingual_splits, make_nested_splits
from ..features.normalize import fit_reference, normalize
from ..features.schema import CATEGORIES, InformedFeatureSchema
from ..model import forward, load_checkpoint
from ..tensor import Matrix
from .embedding import RelevanceItem, embedding_relevance
from .temporal import aggregate_categories, contrastive_profile, overlay_alignment


class RunDirError(ValueError):
    pass


@dataclass
class AttentionSample:
    utterance_id: str
    label: int
    predicted_label: int
    s_emb: np.ndarray  # D x F
    s_temp: np.ndarray  # T x F
    alignment_path: Path | None


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise RunDirError(f"run directory is missing {what}: {path}")
    return path


def load_run(run_dir) -> dict:
    run_dir = Path(run_dir)
    manifest_file = _require(run_dir / "run_manifest.json", "the run manifest")
    result_file = _require(run_dir / "run_result.json", "the result file")
    run_manifest = json.loads(manifest_file.read_text(encoding="utf-8"))
    result = json.loads(result_file.read_text(encoding="utf-8"))
    schema = InformedFeatureSchema.from_json(json.dumps(run_manifest["schema"]))
    records = load_manifest(run_manifest["input_manifest"])
    return {
        "dir": run_dir,
        "manifest": run_manifest,
        "result": result,
        "schema": schema,
        "records": [r for r in records if r.task == run_manifest["task"]],
    }


def best_seed(result: dict) -> int:
    by_seed: dict[int, list[float]] = {}
    for job in result["jobs"]:
        by_seed.setdefault(job["seed"], []).append(job["test_f1"])
    return min(by_seed, key=lambda s: (-float(np.mean(by_seed[s])), s))


def collect_attention(run: dict, seed: int) -> list[AttentionSample]:
    """Forward every fold's test utterances through that fold's checkpoint."""
    from ..training.loop import _load_rows  # shares the SFM1 row loader

    if run["manifest"]["variant"] != "cross_attn":
        raise RunDirError(
            "interpretability reports need a cross_attn run; this directory "
            f"holds a {run['manifest']['variant']!r} experiment"
        )
    cfg = run["manifest"]["config"]
    schema = run["schema"]
    records = run["records"]
    task = run["manifest"]["task"]
    scale = cfg.get("scale", "contracted")
    folds: list[tuple[str, list, list]] = []
    if run["manifest"]["command"] == "crosslingual":
        held = sorted({job["fold"].removeprefix("holdout-") for job in run["result"]["jobs"]})
        for ds in held:
            train, test = make_cross_lingual_splits(records, ds)
            folds.append((f"holdout-{ds}", train, test))
    else:
        plan = make_nested_splits(
            records,
            task,
            outer_k=cfg["outer_folds"],
            seed=cfg["split_seed"],
            inner_k=cfg["inner_folds"],
        )
        by_speaker: dict[str, list] = {}
        for rec in records:
            by_speaker.setdefault(rec.speaker_id, []).append(rec)
        for idx, fold in enumerate(plan.folds):
            train = [r for s in fold.train_speakers for r in by_speaker[s]]
            test = [r for s in fold.test_speakers for r in by_speaker[s]]
            folds.append((f"fold{idx}", train, test))

    samples: list[AttentionSample] = []
    for tag, train_recs, test_recs in folds:
        ckpt_path = _require(
            run["dir"] / f"model_{tag}_seed{seed}.ckpt", f"checkpoint for {tag}"
        )
        params, _ = load_checkpoint(ckpt_path)
        train_rows = _load_rows(train_recs)
        test_rows = _load_rows(test_recs)
        ref = fit_reference(
            [r.x_inf for r in train_rows],
            [r.record.label for r in train_rows],
            schema,
            utterance_ids=[r.record.utterance_id for r in train_rows],
            fitted_on=tag,
        )
        for row in test_rows:
            x_inf = normalize(row.x_inf, ref, schema)
            pred = forward(
                params, x_ssl=Matrix(row.x_ssl), x_inf=Matrix(x_inf), scale=scale
            )
            att = pred.attention
            samples.append(
                AttentionSample(
                    utterance_id=row.record.utterance_id,
                    label=row.record.label,
                    predicted_label=pred.predicted_label,
                    s_emb=att["embedding"].scores.data.copy(),
                    s_temp=att["temporal"].scores.data.copy(),
                    alignment_path=row.record.alignment_path,
                )
            )
    return samples


def embedding_report(
    samples: list[AttentionSample],
    schema: InformedFeatureSchema,
    correct_only: bool = True,
):
    items = [
        RelevanceItem(
            utterance_id=s.utterance_id,
            label=s.label,
            predicted_label=s.predicted_label,
            scores=s.s_emb,
        )
        for s in samples
    ]
    rel = embedding_relevance(items, correct_only=correct_only)
    lines = ["group,feature,value"]
    for group in ("HC", "PD"):
        for name, value in zip(schema.names, rel.group_mean[group]):
            lines.append(f"{group},{name},{value!r}")
    summary = {
        "n_utterances": len(rel.per_utterance),
        "correct_only": correct_only,
        "group_mean": {g: dict(zip(schema.names, map(float, v))) for g, v in rel.group_mean.items()},
        "top_feature": {
            g: schema.names[int(np.argmax(v))] for g, v in rel.group_mean.items()
        },
    }
    return "\n".join(lines) + "\n", summary, rel.difference


def temporal_report(
    samples: list[AttentionSample],
    schema: InformedFeatureSchema,
    correct_only: bool = True,
    aggregate: str = "sum",
    frame_hop_s: float = 0.02,
    alignments_dir=None,
):
    kept = [s for s in samples if not correct_only or s.predicted_label == s.label]
    hc = [s for s in kept if s.label == 0]
    pd = [s for s in kept if s.label == 1]
    if not hc:
        raise RunDirError(
            "temporal contrast undefined: no correctly predicted HC samples"
        )
    hc_runs = [aggregate_categories(s.s_temp, schema, aggregate) for s in hc]
    lines = ["utterance_id,kind,frame,time_s,category,value,unit,label,emphasized"]
    summary: dict = {"n_hc": len(hc), "n_pd": len(pd), "utterances": {}}
    for s in pd:
        run = aggregate_categories(s.s_temp, schema, aggregate)
        profile = contrastive_profile(hc_runs, run)
        spans = []
        if alignments_dir is not None:
            candidate = Path(alignments_dir) / f"{s.utterance_id}.json"
            if candidate.exists():
                spans = load_alignments(candidate)
        elif s.alignment_path:
            spans = load_alignments(s.alignment_path)
        overlay = overlay_alignment(profile, spans, frame_hop_s=frame_hop_s)
        for j in range(profile.length):
            meta = overlay[j]
            for ci, cat in enumerate(CATEGORIES):
                lines.append(
                    f"{s.utterance_id},contrast,{j},{meta['time_s']!r},{cat},"
                    f"{profile.contrast[j, ci]!r},{meta['unit']},{meta['label']},"
                    f"{str(meta['emphasized']).lower()}"
                )
                lines.append(
                    f"{s.utterance_id},reference,{j},{meta['time_s']!r},{cat},"
                    f"{profile.reference[j, ci]!r},,,false"
                )
        summary["utterances"][s.utterance_id] = {
            "frames": profile.length,
            "mean_contrast": {
                cat: float(profile.contrast[:, ci].mean())
                for ci, cat in enumerate(CATEGORIES)
            },
        }
    return "\n".join(lines) + "\n", summary
