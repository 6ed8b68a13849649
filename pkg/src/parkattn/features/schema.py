"""Ordered schema of the clinically informed speech features.

The schema fixes F (the feature count), the category of each feature
(articulation / glottal / phonation / prosody) and whether the value is
computed by this package or supplied externally.  Glottal-flow descriptors
require a dedicated inverse-filtering pipeline and are always external.

The default schema carries the 27 named descriptors; alternative schemas
(e.g. with additional external features) are loaded from a JSON list of
{name, category, source} objects, and everything downstream is keyed by the
schema's stable content hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

CATEGORIES = ("articulation", "glottal", "phonation", "prosody")
SOURCES = ("computed", "external")


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    category: str
    source: str


@dataclass(frozen=True)
class InformedFeatureSchema:
    entries: tuple[FeatureSpec, ...]

    def __post_init__(self):
        if not self.entries:
            raise SchemaError("schema must contain at least one feature")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names in schema")
        for e in self.entries:
            if e.category not in CATEGORIES:
                raise SchemaError(f"{e.name}: unknown category {e.category!r}")
            if e.source not in SOURCES:
                raise SchemaError(f"{e.name}: unknown source {e.source!r}")
        present = {e.category for e in self.entries}
        missing = set(CATEGORIES) - present
        if missing:
            raise SchemaError(f"schema is missing categories: {sorted(missing)}")

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    def index(self, name: str) -> int:
        for i, e in enumerate(self.entries):
            if e.name == name:
                return i
        raise KeyError(name)

    def category_indices(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {c: [] for c in CATEGORIES}
        for i, e in enumerate(self.entries):
            out[e.category].append(i)
        return out

    def to_json(self) -> str:
        return json.dumps(
            [{"name": e.name, "category": e.category, "source": e.source} for e in self.entries],
            indent=2,
        )

    def hash(self) -> str:
        canon = json.dumps(
            [[e.name, e.category, e.source] for e in self.entries],
            separators=(",", ":"),
        )
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_json(cls, text: str) -> "InformedFeatureSchema":
        raw = json.loads(text)
        if not isinstance(raw, list):
            raise SchemaError("schema JSON must be a list of feature objects")
        return cls(
            entries=tuple(
                FeatureSpec(name=o["name"], category=o["category"], source=o["source"])
                for o in raw
            )
        )

    @classmethod
    def from_file(cls, path) -> "InformedFeatureSchema":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


_DEFAULT = (
    # articulation: vocal tract stability via first/second formant statistics
    ("avg_f1", "articulation", "computed"),
    ("std_f1", "articulation", "computed"),
    ("avg_f2", "articulation", "computed"),
    ("std_f2", "articulation", "computed"),
    # glottal: flow descriptors from inverse filtering, supplied externally
    ("var_gci", "glottal", "external"),
    ("avg_oq", "glottal", "external"),
    ("std_oq", "glottal", "external"),
    ("avg_naq", "glottal", "external"),
    ("std_naq", "glottal", "external"),
    ("avg_hrf", "glottal", "external"),
    ("std_hrf", "glottal", "external"),
    # phonation: cycle-to-cycle perturbation and energy
    ("avg_jitter", "phonation", "computed"),
    ("avg_shimmer", "phonation", "computed"),
    ("apq", "phonation", "computed"),
    ("ppq", "phonation", "computed"),
    ("avg_log_e", "phonation", "computed"),
    ("avg_df0", "phonation", "computed"),
    ("std_df0", "phonation", "computed"),
    # prosody: pitch/energy contours, speech rate and pausing
    ("avg_f0", "prosody", "computed"),
    ("std_f0", "prosody", "computed"),
    ("avg_e_voiced", "prosody", "computed"),
    ("std_e_voiced", "prosody", "computed"),
    ("v_rate", "prosody", "computed"),
    ("avg_dur_pause", "prosody", "computed"),
    ("std_dur_pause", "prosody", "computed"),
    ("uvu", "prosody", "computed"),
    ("vvu", "prosody", "computed"),
)


def default_schema() -> InformedFeatureSchema:
    """The 27 built-in features (4 articulation, 7 glottal, 7 phonation, 9 prosody)."""
    return InformedFeatureSchema(
        entries=tuple(FeatureSpec(*row) for row in _DEFAULT)
    )
