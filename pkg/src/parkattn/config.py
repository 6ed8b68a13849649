"""Flat key=value config files and the per-run provenance manifest.

Config files hold one `key = value` pair per line (# comments allowed);
CLI flags override file values, and the fully resolved snapshot is always
persisted so every under-specified default is auditable.  Timestamps and
environment facts live only in the run manifest, never in result files, so
reruns stay byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import fields
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .training.loop import TrainConfig

_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


class ConfigError(ValueError):
    pass


def parse_config_file(path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def build_train_config(file_values: dict[str, str], overrides: dict) -> TrainConfig:
    """Defaults < config file < CLI flags, with typed coercion."""
    known = {f.name: f.type for f in fields(TrainConfig)}
    merged: dict = {}
    for key, raw in file_values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = _coerce(key, raw)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return TrainConfig(**merged)


def _coerce(key: str, raw: str):
    if key == "seeds":
        return tuple(int(s) for s in raw.replace(",", " ").split())
    if key in ("epochs", "batch_size", "outer_folds", "inner_folds", "split_seed"):
        return int(raw)
    if key == "normalize_ssl":
        if raw.lower() not in _BOOL:
            raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
        return _BOOL[raw.lower()]
    if key in ("scale", "lr_schedule", "f1_average"):
        return raw
    return float(raw)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_run_manifest(
    out_dir,
    command: str,
    config_snapshot: dict,
    manifest_path,
    task: str,
    variant: str,
    schema_json: str,
    extra: dict | None = None,
) -> Path:
    """Persist everything needed to re-run bit-identically, before training."""
    from .kernels import backend

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "tool_version": __version__,
        "config": config_snapshot,
        "input_manifest": str(Path(manifest_path).resolve()),
        "input_manifest_sha256": file_sha256(manifest_path),
        "task": task,
        "variant": variant,
        "schema": json.loads(schema_json),
        "kernel_backend": backend(),
        "threads_cap": os.environ.get("PARKATTN_THREADS", ""),
        "started_utc": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        payload.update(extra)
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
