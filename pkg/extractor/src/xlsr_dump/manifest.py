"""Minimal reader for the experiment's JSON-Lines manifest interface.

Only the fields this tool needs are validated; unknown fields pass through
untouched so the same manifest file drives both extraction and training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class ManifestEntry:
    utterance_id: str
    ssl_path: Path  # where the training side expects the dump to appear


def load_entries(path) -> list[ManifestEntry]:
    path = Path(path)
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            for key in ("utterance_id", "ssl_path"):
                if not obj.get(key):
                    raise ValueError(f"{path}:{lineno}: missing field {key!r}")
            if obj["utterance_id"] in seen:
                raise ValueError(f"{path}:{lineno}: duplicate utterance_id {obj['utterance_id']!r}")
            seen.add(obj["utterance_id"])
            ssl = Path(obj["ssl_path"])
            entries.append(
                ManifestEntry(
                    utterance_id=obj["utterance_id"],
                    ssl_path=ssl if ssl.is_absolute() else path.parent / ssl,
                )
            )
    return entries
