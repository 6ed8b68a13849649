from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parkattn.data.manifest import UtteranceRecord
from parkattn.data.splits import SplitError, make_cross_lingual_splits, make_nested_splits


def synth_records(n_hc, n_pd, task="MONOLOGUE", utts_per_spk=2, dataset="d0", prefix=""):
    recs = []
    for label, count in ((0, n_hc), (1, n_pd)):
        for s in range(count):
            spk = f"{prefix}{'hc' if label == 0 else 'pd'}{s}"
            for u in range(utts_per_spk):
                recs.append(
                    UtteranceRecord(
                        utterance_id=f"{spk}_u{u}",
                        speaker_id=spk,
                        dataset_id=dataset,
                        task=task,
                        label=label,
                        ssl_path=Path("x.sfm1"),
                        inf_path=Path("y.sfm1"),
                    )
                )
    return recs


def test_exact_divisibility_gives_balanced_folds():
    recs = synth_records(10, 10)
    plan = make_nested_splits(recs, "MONOLOGUE", outer_k=5, seed=0)
    label_of = {r.speaker_id: r.label for r in recs}
    for fold in plan.folds:
        counts = Counter(label_of[s] for s in fold.test_speakers)
        assert counts[0] == 2 and counts[1] == 2


def test_same_seed_identical_plan():
    recs = synth_records(9, 7)
    a = make_nested_splits(recs, "MONOLOGUE", seed=3)
    b = make_nested_splits(recs, "MONOLOGUE", seed=3)
    assert a == b
    c = make_nested_splits(recs, "MONOLOGUE", seed=4)
    assert a != c


def test_plan_invariant_to_record_order():
    recs = synth_records(8, 8)
    rng = np.random.default_rng(0)
    shuffled = list(recs)
    rng.shuffle(shuffled)
    assert make_nested_splits(recs, "MONOLOGUE", seed=1) == make_nested_splits(
        shuffled, "MONOLOGUE", seed=1
    )


def test_too_few_speakers():
    recs = synth_records(4, 10)
    with pytest.raises(SplitError, match="4 HC speakers"):
        make_nested_splits(recs, "MONOLOGUE", outer_k=5)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(5, 23),
    st.integers(5, 19),
    st.integers(0, 2**31 - 1),
)
def test_split_invariants_property(n_hc, n_pd, seed):
    recs = synth_records(n_hc, n_pd)
    plan = make_nested_splits(recs, "MONOLOGUE", outer_k=5, seed=seed)
    label_of = {r.speaker_id: r.label for r in recs}
    all_speakers = set(label_of)
    seen_in_test = []
    for fold in plan.folds:
        train, test = set(fold.train_speakers), set(fold.test_speakers)
        # speaker disjointness and coverage
        assert not (train & test)
        assert train | test == all_speakers
        seen_in_test.extend(test)
        # stratification: each fold within 1 speaker of perfect proportion
        for label, total in ((0, n_hc), (1, n_pd)):
            got = sum(1 for s in test if label_of[s] == label)
            assert abs(got - total / 5) < 1.0 + 1e-9
        # inner speakers partition the outer-train
        inner_train = set(fold.inner_train_speakers)
        val = set(fold.validation_speakers)
        assert not (inner_train & val)
        assert inner_train | val == train
        assert val  # validation never empty
    # every speaker is tested exactly once across outer folds
    assert Counter(seen_in_test) == Counter(all_speakers)


def test_cross_lingual_partition():
    recs = []
    for i, ds in enumerate(["a", "b", "c", "d", "e"]):
        recs += synth_records(3, 3, dataset=ds, prefix=f"{ds}_")
    seen_test_ids = []
    for ds in ["a", "b", "c", "d", "e"]:
        train, test = make_cross_lingual_splits(recs, ds)
        assert {r.dataset_id for r in test} == {ds}
        assert {r.dataset_id for r in train} == set("abcde") - {ds}
        train_speakers = {r.speaker_id for r in train}
        assert not any(r.speaker_id in train_speakers for r in test)
        seen_test_ids.extend(r.utterance_id for r in test)
    assert Counter(seen_test_ids) == Counter(r.utterance_id for r in recs)


def test_cross_lingual_errors():
    recs = synth_records(2, 2, dataset="only")
    with pytest.raises(SplitError, match="at least 2 datasets"):
        make_cross_lingual_splits(recs, "only")
    recs += synth_records(2, 2, dataset="other", prefix="o_")
    with pytest.raises(SplitError, match="unknown dataset.*only.*other"):
        make_cross_lingual_splits(recs, "missing")
