"""parkattn command line: synth / extract / train / crosslingual / interpret.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  PARKATTN_THREADS
caps the numeric-kernel thread pools (applied before numpy loads when the
console script is the entry point) and is recorded in every run manifest.
"""

from __future__ import annotations

import os
import sys

if "PARKATTN_THREADS" in os.environ and "numpy" not in sys.modules:
    _n = os.environ["PARKATTN_THREADS"]
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _n)

import argparse
import json
import logging
from pathlib import Path

from .config import build_train_config, parse_config_file, write_run_manifest
from .data.manifest import load_manifest
from .data.sfm1 import write_sfm1
from .features.audio import condition_audio, read_wav
from .features.contours import extract_contours
from .features.informed import assemble_informed_vector
from .features.schema import InformedFeatureSchema, default_schema
from .interpret.reports import (
    best_seed,
    collect_attention,
    embedding_report,
    load_run,
    temporal_report,
)
from .interpret.synthetic import SynthConfig, generate_synthetic
from .model import VARIANTS
from .training.loop import train_cross_lingual, train_task

log = logging.getLogger("parkattn")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--lr", type=float, dest="learning_rate")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--weight-decay", type=float, dest="weight_decay")
    p.add_argument("--seeds", help="comma-separated training seeds")
    p.add_argument("--outer-folds", type=int, dest="outer_folds")
    p.add_argument("--inner-folds", type=int, dest="inner_folds")
    p.add_argument("--split-seed", type=int, dest="split_seed")
    p.add_argument("--scale", choices=["contracted", "key_dim"])
    p.add_argument("--lr-schedule", choices=["step", "epoch"], dest="lr_schedule")
    p.add_argument(
        "--normalize-ssl", action="store_const", const=True, dest="normalize_ssl"
    )
    p.add_argument("--f1-average", choices=["macro", "binary_pd"], dest="f1_average")
    p.add_argument("--jobs", type=int, default=1, help="parallel (fold, seed) worker processes")


def _resolve_config(args) -> "TrainConfig":
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "learning_rate",
            "epochs",
            "batch_size",
            "weight_decay",
            "outer_folds",
            "inner_folds",
            "split_seed",
            "scale",
            "lr_schedule",
            "normalize_ssl",
            "f1_average",
        )
    }
    if getattr(args, "seeds", None):
        overrides["seeds"] = tuple(int(s) for s in args.seeds.replace(",", " ").split())
    return build_train_config(file_values, overrides)


def _load_schema(arg) -> InformedFeatureSchema:
    return InformedFeatureSchema.from_file(arg) if arg else default_schema()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parkattn",
        description="Interpretable cross-attention screening models for Parkinson's speech",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic planted-signal corpus")
    p.add_argument("--speakers", type=int, default=40)
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--ssl-dim", type=int, default=64)
    p.add_argument("--planted-index", type=int, default=5)
    p.add_argument("--effect-size", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--utterances-per-speaker", type=int, default=4)
    p.add_argument("--datasets", type=int, default=1)
    p.add_argument("--task", default="MONOLOGUE")
    p.add_argument("--schema")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("extract", help="informed-feature extraction from WAV files")
    p.add_argument("--audio-dir", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--schema")
    p.add_argument(
        "--external-features",
        help="JSON file: utterance_id -> {feature: value} for external (glottal) entries",
    )
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("train", help="nested cross-validation experiment")
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--model", required=True, choices=list(VARIANTS))
    p.add_argument("--schema")
    p.add_argument("--out-dir", required=True)
    _add_train_flags(p)

    p = sub.add_parser("crosslingual", help="leave-one-dataset-out experiment")
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--model", required=True, choices=list(VARIANTS))
    p.add_argument("--schema")
    p.add_argument("--hold-out", help="evaluate one held-out dataset (default: each in turn)")
    p.add_argument("--out-dir", required=True)
    _add_train_flags(p)

    p = sub.add_parser("interpret", help="attention reports from a finished run")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--mode", required=True, choices=["embedding", "temporal"])
    p.add_argument("--seed", type=int, help="override the best-seed selection")
    p.add_argument(
        "--all-predictions",
        action="store_true",
        help="include misclassified test samples (default: correct only)",
    )
    p.add_argument("--aggregate", choices=["sum", "mean"], default="sum")
    p.add_argument("--frame-hop", type=float, default=0.02)
    p.add_argument(
        "--alignments",
        help="directory of <utterance_id>.json interval files (overrides manifest paths)",
    )
    p.add_argument("--out", required=True)
    return parser


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_speakers=args.speakers,
        frames=args.frames,
        ssl_dim=args.ssl_dim,
        planted_feature_index=args.planted_index,
        effect_size=args.effect_size,
        seed=args.seed,
        utterances_per_speaker=args.utterances_per_speaker,
        task=args.task,
        n_datasets=args.datasets,
    )
    manifest = generate_synthetic(cfg, args.out_dir, schema=_load_schema(args.schema))
    print(manifest)
    return 0


def cmd_extract(args) -> int:
    schema = _load_schema(args.schema)
    records = load_manifest(args.manifest, check_files=False)
    if not records:
        log.warning("manifest %s is empty; nothing to extract", args.manifest)
        return 0
    external_all: dict = {}
    if args.external_features:
        external_all = json.loads(Path(args.external_features).read_text(encoding="utf-8"))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = []
    for rec in records:
        try:
            wav = Path(args.audio_dir) / f"{rec.utterance_id}.wav"
            samples, rate = read_wav(wav)
            conditioned = condition_audio(samples, rate)
            contours = extract_contours(conditioned.samples)
            vector = assemble_informed_vector(
                contours, external_all.get(rec.utterance_id, {}), schema
            )
            write_sfm1(
                vector.reshape(1, -1),
                {"schema_hash": schema.hash(), "utterance": rec.utterance_id,
                 "loudness_warning": conditioned.silent},
                out_dir / f"{rec.utterance_id}.inf.sfm1",
            )
        except Exception as exc:
            failures.append((rec.utterance_id, str(exc)))
    for utt, message in failures:
        print(f"FAILED {utt}: {message}", file=sys.stderr)
    print(f"extracted {len(records) - len(failures)}/{len(records)} utterances -> {out_dir}")
    return 1 if failures else 0


def _run_experiment(args, cross_lingual: bool) -> int:
    schema = _load_schema(args.schema)
    cfg = _resolve_config(args)
    records = load_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    from .training.loop import _config_snapshot

    write_run_manifest(
        out_dir,
        command="crosslingual" if cross_lingual else "train",
        config_snapshot=_config_snapshot(cfg, schema),
        manifest_path=args.manifest,
        task=args.task,
        variant=args.model,
        schema_json=schema.to_json(),
        extra={"hold_out": args.hold_out} if cross_lingual else None,
    )
    if cross_lingual:
        result = train_cross_lingual(
            records, args.task, args.model, cfg, schema,
            hold_out=args.hold_out, out_dir=out_dir, jobs=args.jobs,
        )
    else:
        result = train_task(
            records, args.task, args.model, cfg, schema, out_dir=out_dir, jobs=args.jobs
        )
    (out_dir / "run_result.json").write_text(result.to_json() + "\n", encoding="utf-8")
    (out_dir / "predictions.csv").write_text(result.predictions_csv(), encoding="utf-8")
    summary = result.summary()
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_interpret(args) -> int:
    run = load_run(args.run_dir)
    seed = args.seed if args.seed is not None else best_seed(run["result"])
    samples = collect_attention(run, seed)
    correct_only = not args.all_predictions
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    schema = run["schema"]
    if args.mode == "embedding":
        csv_text, summary, difference = embedding_report(samples, schema, correct_only)
        (out / "embedding_relevance.csv").write_text(csv_text, encoding="utf-8")
        write_sfm1(
            difference,
            {"kind": "relevance_difference_hc_minus_pd", "seed": seed},
            out / "embedding_difference.sfm1",
        )
        summary["seed"] = seed
        (out / "embedding_summary.json").write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    else:
        csv_text, summary = temporal_report(
            samples, schema, correct_only, args.aggregate, args.frame_hop,
            alignments_dir=args.alignments,
        )
        (out / "temporal_contrast.csv").write_text(csv_text, encoding="utf-8")
        summary["seed"] = seed
        (out / "temporal_summary.json").write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    print(f"wrote {args.mode} report for seed {seed} -> {out}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PARKATTN_LOG", "INFO"),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "extract":
            return cmd_extract(args)
        if args.command == "train":
            return _run_experiment(args, cross_lingual=False)
        if args.command == "crosslingual":
            return _run_experiment(args, cross_lingual=True)
        return cmd_interpret(args)
    except Exception as exc:  # runtime failures map to exit 1, usage stays 2
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
