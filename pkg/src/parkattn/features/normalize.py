"""Healthy-control-referenced feature normalization.

Each feature is centered on the median and scaled by the population standard
deviation of the *healthy-control rows of the training partition only*, so
pathological observations are expressed as deviations from the healthy
baseline.  Standard deviations below 1e-8 are clamped to 1e-8 to keep
constant features finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schema import InformedFeatureSchema

STD_FLOOR = 1e-8


class NormalizationError(ValueError):
    pass


@dataclass
class NormalizationReference:
    median: np.ndarray
    std: np.ndarray
    schema_hash: str
    fitted_on: str = ""
    hc_only: bool = True


def fit_reference(
    vectors,
    labels,
    schema: InformedFeatureSchema,
    utterance_ids=None,
    fitted_on: str = "",
) -> NormalizationReference:
    """Fit per-feature median / population std on the HC rows only.

    PD rows are ignored entirely, so adding or removing them can never change
    the reference.  Requires at least two HC rows.
    """
    vectors = [np.asarray(v, dtype=np.float64).reshape(-1) for v in vectors]
    if len(vectors) != len(labels):
        raise NormalizationError(f"{len(vectors)} vectors but {len(labels)} labels")
    ids = utterance_ids if utterance_ids is not None else [str(i) for i in range(len(vectors))]
    for vec, uid in zip(vectors, ids):
        if vec.shape[0] != schema.size:
            raise NormalizationError(
                f"utterance {uid}: vector has {vec.shape[0]} features, schema has {schema.size}"
            )
        if not np.all(np.isfinite(vec)):
            bad = int(np.flatnonzero(~np.isfinite(vec))[0])
            raise NormalizationError(
                f"utterance {uid}: non-finite value for feature {schema.names[bad]!r}"
            )
    hc = np.array([v for v, lab in zip(vectors, labels) if lab == 0])
    if hc.shape[0] < 2:
        raise NormalizationError(
            f"need at least 2 HC rows to fit a reference, got {hc.shape[0]}"
        )
    median = np.median(hc, axis=0)
    std = hc.std(axis=0)  # population (ddof=0)
    std = np.where(std < STD_FLOOR, STD_FLOOR, std)
    return NormalizationReference(
        median=median, std=std, schema_hash=schema.hash(), fitted_on=fitted_on
    )


def normalize(
    x: np.ndarray,
    ref: NormalizationReference,
    schema: InformedFeatureSchema,
) -> np.ndarray:
    if schema.hash() != ref.schema_hash:
        raise NormalizationError(
            f"schema hash {schema.hash()} does not match reference {ref.schema_hash}"
        )
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != schema.size:
        raise NormalizationError(f"vector has {x.shape[0]} features, schema has {schema.size}")
    return (x - ref.median) / ref.std
