"""Temporal contrastive analysis: category aggregation, time warping against
the shortest utterance, healthy-reference subtraction, and phoneme/word
overlay from externally produced alignments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..data.manifest import AlignmentInterval
from ..features.schema import CATEGORIES, InformedFeatureSchema


def aggregate_categories(
    scores: np.ndarray,
    schema: InformedFeatureSchema,
    mode: str = "sum",
) -> np.ndarray:
    """Collapse a T x F attention matrix to T x 4 per-category columns.

    Columns follow the canonical category order (articulation, glottal,
    phonation, prosody).  "sum" preserves each frame's total attention mass
    exactly; "mean" reports the average per feature instead.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[1] != schema.size:
        raise ValueError(
            f"scores shape {scores.shape} does not match schema of {schema.size} features"
        )
    indices = schema.category_indices()
    out = np.empty((scores.shape[0], len(CATEGORIES)))
    for ci, cat in enumerate(CATEGORIES):
        cols = indices[cat]
        block = scores[:, cols]
        out[:, ci] = block.sum(axis=1) if mode == "sum" else block.mean(axis=1)
    return out


def dtw_align(
    seq: np.ndarray,
    ref: np.ndarray,
) -> tuple[np.ndarray, list[tuple[int, int]], float]:
    """Classic DTW of `seq` onto `ref` with steps {(1,0),(0,1),(1,1)}.

    Euclidean frame distance, boundary conditions (0,0) -> (T-1, L-1).
    Returns (warped, path, cost): `warped[j]` is the mean of the seq frames
    the monotonic optimal path maps to reference frame j.
    """
    seq = np.atleast_2d(np.asarray(seq, dtype=np.float64))
    ref = np.atleast_2d(np.asarray(ref, dtype=np.float64))
    if seq.shape[1] != ref.shape[1]:
        raise ValueError(f"dimension mismatch: seq {seq.shape} vs ref {ref.shape}")
    diff = seq[:, None, :] - ref[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    acc, step = kernels.dtw_table(dist)
    i, j = seq.shape[0] - 1, ref.shape[0] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        choice = step[i, j]
        if choice == 0:
            i, j = i - 1, j - 1
        elif choice == 1:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    warped = np.zeros((ref.shape[0], seq.shape[1]))
    counts = np.zeros(ref.shape[0])
    for pi, pj in path:
        warped[pj] += seq[pi]
        counts[pj] += 1
    warped /= counts[:, None]
    return warped, path, float(acc[-1, -1])


@dataclass
class ContrastiveProfile:
    length: int  # frames of the shortest (reference) utterance
    reference: np.ndarray  # L x C mean of warped HC runs
    contrast: np.ndarray  # L x C, warped PD minus reference
    pd_path: list[tuple[int, int]]  # DTW path of the PD run onto the reference
    hc_costs: list[float]
    pd_cost: float


def contrastive_profile(
    hc_runs: list[np.ndarray],
    pd_run: np.ndarray,
) -> ContrastiveProfile:
    """Warp everything to the shortest run; subtract the HC mean from PD."""
    if not hc_runs:
        raise ValueError("contrastive profile needs at least one HC run")
    runs = [np.atleast_2d(np.asarray(r, dtype=np.float64)) for r in hc_runs]
    pd = np.atleast_2d(np.asarray(pd_run, dtype=np.float64))
    everything = runs + [pd]
    ref = min(everything, key=lambda r: r.shape[0])
    warped_hc = []
    hc_costs = []
    for run in runs:
        w, _, cost = dtw_align(run, ref)
        warped_hc.append(w)
        hc_costs.append(cost)
    warped_pd, pd_path, pd_cost = dtw_align(pd, ref)
    reference = np.mean(warped_hc, axis=0)
    return ContrastiveProfile(
        length=ref.shape[0],
        reference=reference,
        contrast=warped_pd - reference,
        pd_path=pd_path,
        hc_costs=hc_costs,
        pd_cost=pd_cost,
    )


def overlay_alignment(
    profile: ContrastiveProfile,
    intervals: list[AlignmentInterval],
    frame_hop_s: float = 0.02,
) -> list[dict]:
    """Label each reference frame with the covering phoneme/word.

    A reference frame maps (through the PD utterance's DTW path) to a run of
    PD frames; the middle one's time selects the interval under the
    half-open [start_s, end_s) convention.  Frames outside every interval
    get an empty label.
    """
    for a, b in zip(intervals, intervals[1:]):
        if b.start_s < a.end_s:
            raise ValueError(f"intervals overlap at {b.start_s:.3f}s")
    by_ref: dict[int, list[int]] = {}
    for i, j in profile.pd_path:
        by_ref.setdefault(j, []).append(i)
    rows = []
    for j in range(profile.length):
        mapped = by_ref.get(j, [])
        pd_frame = mapped[len(mapped) // 2] if mapped else j
        t = pd_frame * frame_hop_s
        unit = ""
        label = ""
        emphasized = False
        for span in intervals:
            if span.start_s <= t < span.end_s:
                unit, label, emphasized = span.unit, span.label, span.emphasized
                break
        rows.append(
            {
                "frame": j,
                "pd_frame": pd_frame,
                "time_s": t,
                "unit": unit,
                "label": label,
                "emphasized": emphasized,
            }
        )
    return rows
