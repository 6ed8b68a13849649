"""Embedding-level relevance: which informed features the attention mass
concentrates on, per utterance and per group.

An utterance's relevance vector is the mean over the embedding axis of its
D x F score matrix; since each row is a probability distribution over the F
informed features, the mean is one too.  Group views average per-utterance
vectors (and full score matrices) over HC and PD separately; the difference
map is mean_HC - mean_PD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RelevanceItem:
    utterance_id: str
    label: int  # 0 HC / 1 PD
    predicted_label: int
    scores: np.ndarray  # D x F embedding attention


@dataclass
class EmbeddingRelevance:
    per_utterance: list[tuple[str, int, np.ndarray]]  # (utterance_id, label, F-vector)
    group_mean: dict[str, np.ndarray]  # "HC"/"PD" -> F-vector
    group_mean_full: dict[str, np.ndarray]  # "HC"/"PD" -> D x F
    difference: np.ndarray  # D x F, HC minus PD


def embedding_relevance(
    items: list[RelevanceItem],
    correct_only: bool = True,
) -> EmbeddingRelevance:
    kept = [
        it for it in items if not correct_only or it.predicted_label == it.label
    ]
    groups: dict[int, list[RelevanceItem]] = {0: [], 1: []}
    for it in kept:
        groups[it.label].append(it)
    for label, name in ((0, "HC"), (1, "PD")):
        if not groups[label]:
            raise ValueError(
                f"no {name} utterances left after filtering"
                + (" to correct predictions" if correct_only else "")
            )
    per_utterance = [
        (it.utterance_id, it.label, it.scores.mean(axis=0)) for it in kept
    ]
    group_mean = {}
    group_mean_full = {}
    for label, name in ((0, "HC"), (1, "PD")):
        vectors = np.array([v for _, lab, v in per_utterance if lab == label])
        group_mean[name] = vectors.mean(axis=0)
        group_mean_full[name] = np.mean([it.scores for it in groups[label]], axis=0)
    return EmbeddingRelevance(
        per_utterance=per_utterance,
        group_mean=group_mean,
        group_mean_full=group_mean_full,
        difference=group_mean_full["HC"] - group_mean_full["PD"],
    )
