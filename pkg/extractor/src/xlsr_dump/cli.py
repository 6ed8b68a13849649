"""xlsr-dump command line.

Exit codes match the experiment tooling contract: 0 success, 1 runtime
failure (including any per-utterance extraction failure), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .extract import DEFAULT_MODEL, ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlsr-dump",
        description="Dump frozen Wav2Vec2-XLSR hidden states as SFM1 matrices",
    )
    parser.add_argument("--manifest", required=True, help="JSON-Lines experiment manifest")
    parser.add_argument(
        "--audio-dir", help="directory holding <utterance_id>.wav (default: manifest directory)"
    )
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--layer", type=int, default=7, help="1-indexed transformer block")
    parser.add_argument("--model", default=DEFAULT_MODEL, help="model id or local checkpoint path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExtractionJob(
        manifest_path=Path(args.manifest),
        out_dir=Path(args.out_dir),
        layer=args.layer,
        model_id=args.model,
        audio_dir=Path(args.audio_dir) if args.audio_dir else None,
    )
    try:
        report = extract(job)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for failure in report.failures:
        print(f"FAILED {failure['utterance_id']}: {failure['error']}", file=sys.stderr)
    print(f"wrote {len(report.written)} matrices, {len(report.failures)} failures -> {args.out_dir}")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
