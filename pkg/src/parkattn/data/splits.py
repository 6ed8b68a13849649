"""Speaker-independent split generation.

Nested cross-validation deals speakers (not utterances) into folds so no
speaker ever crosses a train/test boundary, stratified by condition: the HC
and PD speaker pools are shuffled separately with a seeded PCG64 stream and
dealt round-robin, which bounds per-fold label counts within one speaker of
perfect proportionality.  Speakers are sorted before shuffling so the plan
is invariant to the input record order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifest import UtteranceRecord


class SplitError(ValueError):
    pass


@dataclass
class FoldPlan:
    train_speakers: tuple[str, ...]
    test_speakers: tuple[str, ...]
    inner_train_speakers: tuple[str, ...]
    validation_speakers: tuple[str, ...]


@dataclass
class SplitPlan:
    task: str
    seed: int
    outer_k: int
    inner_k: int
    folds: list[FoldPlan] = field(default_factory=list)


def _speakers_by_label(records: list[UtteranceRecord], task: str) -> dict[int, list[str]]:
    pools: dict[int, set[str]] = {0: set(), 1: set()}
    for rec in records:
        if rec.task == task:
            pools[rec.label].add(rec.speaker_id)
    both = pools[0] & pools[1]
    if both:
        raise SplitError(f"speakers with conflicting labels: {sorted(both)[:5]}")
    return {label: sorted(spk) for label, spk in pools.items()}


def make_nested_splits(
    records: list[UtteranceRecord],
    task: str,
    outer_k: int = 5,
    seed: int = 0,
    inner_k: int = 4,
) -> SplitPlan:
    """Deal speakers of one task into `outer_k` stratified folds.

    Within each outer training set, one of `inner_k` speaker groups (again
    dealt per label) is carved out as the validation set.
    """
    pools = _speakers_by_label(records, task)
    for label, spk in pools.items():
        name = "PD" if label else "HC"
        if len(spk) < outer_k:
            raise SplitError(
                f"task {task!r} has {len(spk)} {name} speakers, "
                f"need at least {outer_k} per label for {outer_k} folds"
            )
    rng = np.random.default_rng(np.random.PCG64(seed))
    dealt: dict[int, list[list[str]]] = {}
    for label in (0, 1):
        spk = np.array(pools[label], dtype=object)
        rng.shuffle(spk)
        dealt[label] = [list(spk[i::outer_k]) for i in range(outer_k)]
    plan = SplitPlan(task=task, seed=seed, outer_k=outer_k, inner_k=inner_k)
    for i in range(outer_k):
        test = sorted(dealt[0][i] + dealt[1][i])
        train = sorted(
            s for label in (0, 1) for j in range(outer_k) if j != i for s in dealt[label][j]
        )
        # inner split: per label, deal the outer-train speakers into inner_k
        # groups and hold out group 0 for validation
        val: list[str] = []
        for label in (0, 1):
            pool = np.array(
                sorted(s for j in range(outer_k) if j != i for s in dealt[label][j]),
                dtype=object,
            )
            rng_inner = np.random.default_rng(np.random.PCG64([seed, i, label]))
            rng_inner.shuffle(pool)
            val.extend(pool[0::inner_k])
        val_set = set(val)
        plan.folds.append(
            FoldPlan(
                train_speakers=tuple(train),
                test_speakers=tuple(test),
                inner_train_speakers=tuple(s for s in train if s not in val_set),
                validation_speakers=tuple(sorted(val)),
            )
        )
    return plan


def make_cross_lingual_splits(
    records: list[UtteranceRecord],
    held_out_dataset: str,
) -> tuple[list[UtteranceRecord], list[UtteranceRecord]]:
    """Leave-one-dataset-out: the held-out corpus becomes the test set."""
    datasets = {rec.dataset_id for rec in records}
    if len(datasets) < 2:
        raise SplitError(f"need at least 2 datasets, found {sorted(datasets)}")
    if held_out_dataset not in datasets:
        raise SplitError(
            f"unknown dataset {held_out_dataset!r}, available: {sorted(datasets)}"
        )
    train = [rec for rec in records if rec.dataset_id != held_out_dataset]
    test = [rec for rec in records if rec.dataset_id == held_out_dataset]
    return train, test
