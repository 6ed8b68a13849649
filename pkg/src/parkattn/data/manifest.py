"""JSON-Lines corpus manifests and externally produced alignment files.

One manifest line per utterance, snake_case keys matching
:class:`UtteranceRecord`.  Relative ssl/inf/alignment paths are resolved
against the manifest's directory, keeping corpora relocatable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

TASKS = ("VOWELS", "WORDS", "DDK", "SENTENCES", "READ-TEXT", "MONOLOGUE")
LABELS = {"HC": 0, "PD": 1}


class ManifestError(ValueError):
    pass


@dataclass
class UtteranceRecord:
    utterance_id: str
    speaker_id: str
    dataset_id: str
    task: str
    label: int  # 0 = HC, 1 = PD
    ssl_path: Path
    inf_path: Path
    alignment_path: Optional[Path] = None

    @property
    def label_name(self) -> str:
        return "PD" if self.label else "HC"


_REQUIRED = ("utterance_id", "speaker_id", "dataset_id", "task", "label", "ssl_path", "inf_path")


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_manifest(path, check_files: bool = True) -> list[UtteranceRecord]:
    """Parse and validate a manifest; errors carry the offending line number.

    With check_files=True (the default) records whose ssl/inf files are
    missing are rejected rather than silently skipped.
    """
    path = Path(path)
    base = path.parent
    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            for key in _REQUIRED:
                if key not in obj:
                    raise ManifestError(f"{path}:{lineno}: missing field {key!r}")
                if key.endswith("_id") and not str(obj[key]):
                    raise ManifestError(f"{path}:{lineno}: empty {key}")
            if obj["task"] not in TASKS:
                raise ManifestError(
                    f"{path}:{lineno}: unknown task {obj['task']!r}, expected one of {TASKS}"
                )
            if obj["label"] not in LABELS:
                raise ManifestError(
                    f"{path}:{lineno}: unknown label {obj['label']!r}, expected HC or PD"
                )
            if obj["utterance_id"] in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate utterance_id {obj['utterance_id']!r}")
            seen.add(obj["utterance_id"])
            rec = UtteranceRecord(
                utterance_id=obj["utterance_id"],
                speaker_id=obj["speaker_id"],
                dataset_id=obj["dataset_id"],
                task=obj["task"],
                label=LABELS[obj["label"]],
                ssl_path=_resolve(base, obj["ssl_path"]),
                inf_path=_resolve(base, obj["inf_path"]),
                alignment_path=_resolve(base, obj["alignment_path"])
                if obj.get("alignment_path")
                else None,
            )
            if check_files:
                for kind, p in (("ssl", rec.ssl_path), ("informed", rec.inf_path)):
                    if not p.exists():
                        raise ManifestError(
                            f"{path}:{lineno}: {kind} file not found: {p}"
                        )
            records.append(rec)
    return records


@dataclass
class AlignmentInterval:
    unit: str  # "phoneme" or "word"
    label: str
    start_s: float
    end_s: float
    emphasized: bool = False


def load_alignments(path) -> list[AlignmentInterval]:
    """JSON list of {unit, label, start_s, end_s[, emphasized]} intervals."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ManifestError(f"{path}: alignment file must be a JSON list")
    intervals = []
    for i, obj in enumerate(raw):
        if obj.get("unit") not in ("phoneme", "word"):
            raise ManifestError(f"{path}[{i}]: unit must be 'phoneme' or 'word'")
        start, end = float(obj["start_s"]), float(obj["end_s"])
        if end <= start or start < 0:
            raise ManifestError(f"{path}[{i}]: bad interval [{start}, {end})")
        intervals.append(
            AlignmentInterval(
                unit=obj["unit"],
                label=str(obj["label"]),
                start_s=start,
                end_s=end,
                emphasized=bool(obj.get("emphasized", False)),
            )
        )
    for a, b in zip(intervals, intervals[1:]):
        if b.start_s < a.end_s:
            raise ManifestError(f"{path}: intervals overlap at {b.start_s:.3f}s")
    return intervals
