"""Assemble the informed-feature vector from acoustic contours.

Perturbation measures follow the usual cycle-based definitions, in percent:

* jitter   = mean |T[i+1] - T[i]| / mean T
* shimmer  = mean |A[i+1] - A[i]| / mean A
* PPQ/APQ  = 5-point perturbation quotients (deviation from the centered
  5-cycle mean, relative to the overall mean)

Cycle sequences never span voiced-segment boundaries.  Statistics that need
data which an utterance does not contain (e.g. formants in an unvoiced
recording, pause statistics with no pauses) default to 0.0.
"""

from __future__ import annotations

import numpy as np

from .contours import AcousticContours
from .schema import InformedFeatureSchema


class InformedFeatureError(ValueError):
    pass


def _safe_mean(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    return float(values.mean()) if values.size else 0.0


def _safe_std(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    return float(values.std()) if values.size else 0.0


def _perturbation(series_per_segment: list[np.ndarray]) -> float:
    """Mean absolute consecutive difference over mean level, in percent."""
    diffs: list[np.ndarray] = []
    levels: list[np.ndarray] = []
    for series in series_per_segment:
        if series.size >= 2:
            diffs.append(np.abs(np.diff(series)))
            levels.append(series)
    if not diffs:
        return 0.0
    level = np.concatenate(levels).mean()
    if level <= 0:
        return 0.0
    return 100.0 * float(np.concatenate(diffs).mean()) / level


def _quotient_5pt(series_per_segment: list[np.ndarray]) -> float:
    """5-point perturbation quotient in percent."""
    devs: list[np.ndarray] = []
    levels: list[np.ndarray] = []
    for series in series_per_segment:
        n = series.size
        if n >= 5:
            windows = np.lib.stride_tricks.sliding_window_view(series, 5)
            centered = series[2 : n - 2]
            devs.append(np.abs(centered - windows.mean(axis=1)))
            levels.append(series)
    if not devs:
        return 0.0
    level = np.concatenate(levels).mean()
    if level <= 0:
        return 0.0
    return 100.0 * float(np.concatenate(devs).mean()) / level


def compute_informed_features(c: AcousticContours) -> dict[str, float]:
    """All built-in (computed-source) features as a name -> value map."""
    voiced = c.f0 > 0
    periods = [np.diff(t) for t in c.cycle_times]

    # first difference of f0 on voiced frames, not crossing segment gaps
    df0: list[float] = []
    idx = np.flatnonzero(voiced)
    for a, b in zip(idx, idx[1:]):
        if b == a + 1:
            df0.append(c.f0[b] - c.f0[a])

    voiced_time = sum(e - s for s, e in c.voiced_segments)
    vvu = voiced_time / c.duration_s if c.duration_s > 0 else 0.0
    uvu = 1.0 - vvu
    pause_durations = [e - s for s, e in c.pauses]

    return {
        "avg_f1": _safe_mean(c.f1[voiced]),
        "std_f1": _safe_std(c.f1[voiced]),
        "avg_f2": _safe_mean(c.f2[voiced]),
        "std_f2": _safe_std(c.f2[voiced]),
        "avg_jitter": _perturbation(periods),
        "avg_shimmer": _perturbation(c.cycle_amps),
        "apq": _quotient_5pt(c.cycle_amps),
        "ppq": _quotient_5pt(periods),
        "avg_log_e": _safe_mean(c.log_energy[c.active]),
        "avg_df0": _safe_mean(df0),
        "std_df0": _safe_std(df0),
        "avg_f0": _safe_mean(c.f0[voiced]),
        "std_f0": _safe_std(c.f0[voiced]),
        "avg_e_voiced": _safe_mean(c.log_energy[voiced]),
        "std_e_voiced": _safe_std(c.log_energy[voiced]),
        "v_rate": len(c.voiced_segments) / c.duration_s if c.duration_s > 0 else 0.0,
        "avg_dur_pause": _safe_mean(pause_durations),
        "std_dur_pause": _safe_std(pause_durations),
        "uvu": uvu,
        "vvu": vvu,
    }


def assemble_informed_vector(
    c: AcousticContours,
    external: dict[str, float],
    schema: InformedFeatureSchema,
) -> np.ndarray:
    """Fill the schema-ordered vector from contours and external values."""
    computed = compute_informed_features(c)
    out = np.empty(schema.size, dtype=np.float64)
    for i, spec in enumerate(schema.entries):
        if spec.source == "external":
            if spec.name not in external:
                raise InformedFeatureError(
                    f"missing external feature {spec.name!r} ({spec.category})"
                )
            out[i] = float(external[spec.name])
        else:
            if spec.name not in computed:
                raise InformedFeatureError(
                    f"schema requests unknown computed feature {spec.name!r}"
                )
            out[i] = computed[spec.name]
    return out
