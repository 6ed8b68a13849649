"""Classification metrics."""

from __future__ import annotations


def f1_score(pairs, average: str = "macro") -> float:
    """F1 in percent over (predicted, true) label pairs.

    "macro" averages the per-class F1 of HC (0) and PD (1); "binary_pd"
    reports the PD-class F1 alone.  A class with no predictions and no
    instances contributes an F1 of 0.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("f1_score needs at least one prediction")
    per_class = []
    for cls in (0, 1):
        tp = sum(1 for pred, true in pairs if pred == cls and true == cls)
        fp = sum(1 for pred, true in pairs if pred == cls and true != cls)
        fn = sum(1 for pred, true in pairs if pred != cls and true == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(f1)
    if average == "macro":
        return 100.0 * (per_class[0] + per_class[1]) / 2.0
    if average == "binary_pd":
        return 100.0 * per_class[1]
    raise ValueError(f"unknown average {average!r}")
