"""The seven multi-label evaluation criteria and the shared rank function.

All criteria take per-example :class:`LabelScores` (real-valued confidences
plus the discrete predicted set) against ground-truth label sets.  Every
example must satisfy 1 <= |Y_i| <= T-1 so that the ranking-loss denominator
|Y_i| * |complement| is positive.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class LabelScores:
    """Per-label confidences and the derived discrete prediction."""

    scores: np.ndarray   # shape (T,), finite reals
    predicted: frozenset

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("scores must be a 1-d vector")
        if not np.isfinite(arr).all():
            raise ValueError("scores must be finite")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)
        object.__setattr__(self, "predicted", frozenset(int(y) for y in self.predicted))


@dataclass(frozen=True)
class MetricReport:
    hamming_loss: float
    one_error: float
    coverage: float
    ranking_loss: float
    avg_precision: float
    avg_recall: float
    avg_f1: float

    # Column order used by the CLI table.
    FIELDS = ("hamming_loss", "one_error", "coverage", "ranking_loss",
              "avg_precision", "avg_recall", "avg_f1")
    HEADERS = ("hloss", "one-error", "coverage", "rloss",
               "aveprec", "averecl", "aveF1")

    def values(self) -> Tuple[float, ...]:
        return tuple(getattr(self, f) for f in self.FIELDS)


def rank_labels(scores: Sequence[float]) -> np.ndarray:
    """1-based ranks per label: rank 1 is the highest score, ties broken by
    ascending label index.  The result is a permutation of 1..T."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size < 1:
        raise ValueError("scores must be a non-empty 1-d vector")
    if not np.isfinite(s).all():
        raise ValueError("scores must be finite")
    # lexsort is stable: primary key -score, secondary key label index
    order = np.lexsort((np.arange(s.size), -s))
    ranks = np.empty(s.size, dtype=np.int64)
    ranks[order] = np.arange(1, s.size + 1)
    return ranks


def _check_pairs(preds, truth):
    if len(preds) != len(truth):
        raise ValueError("preds and truth must have equal length")
    if len(preds) == 0:
        raise ValueError("need at least one example")


def _check_nonempty_truth(truth):
    for i, y in enumerate(truth):
        if len(y) == 0:
            raise ValueError(f"empty truth label set at index {i}")


def _check_range(preds, truth, T):
    for i, (p, y) in enumerate(zip(preds, truth)):
        if any(not 0 <= l < T for l in p.predicted) or any(not 0 <= l < T for l in y):
            raise ValueError(f"label index out of range [0, {T}) at example {i}")


def hamming_loss(preds: Sequence[LabelScores], truth: Sequence[frozenset], T: int) -> float:
    _check_pairs(preds, truth)
    _check_range(preds, truth, T)
    total = 0
    for p, y in zip(preds, truth):
        total += len(p.predicted.symmetric_difference(y))
    return total / (len(preds) * T)


def one_error(preds: Sequence[LabelScores], truth: Sequence[frozenset]) -> float:
    _check_pairs(preds, truth)
    _check_nonempty_truth(truth)
    misses = 0
    for p, y in zip(preds, truth):
        top = int(np.argmax(rank_labels(p.scores) == 1))
        if top not in y:
            misses += 1
    return misses / len(preds)


def coverage(preds: Sequence[LabelScores], truth: Sequence[frozenset]) -> float:
    _check_pairs(preds, truth)
    _check_nonempty_truth(truth)
    total = 0
    for p, y in zip(preds, truth):
        ranks = rank_labels(p.scores)
        total += max(int(ranks[l]) for l in y) - 1
    return total / len(preds)


def ranking_loss(preds: Sequence[LabelScores], truth: Sequence[frozenset], T: int) -> float:
    """Average fraction of (proper, improper) label pairs that are misordered.

    A score tie counts as misordered (the comparison is <=, not <)."""
    _check_pairs(preds, truth)
    total = 0.0
    for i, (p, y) in enumerate(zip(preds, truth)):
        if not (1 <= len(y) <= T - 1):
            raise ValueError(
                f"truth set at index {i} has |Y|={len(y)}; need 1 <= |Y| <= T-1"
            )
        comp = [l for l in range(T) if l not in y]
        s = p.scores
        bad = sum(1 for y1 in y for y2 in comp if s[y1] <= s[y2])
        total += bad / (len(y) * len(comp))
    return total / len(preds)


def average_precision(preds: Sequence[LabelScores], truth: Sequence[frozenset]) -> float:
    _check_pairs(preds, truth)
    _check_nonempty_truth(truth)
    total = 0.0
    for p, y in zip(preds, truth):
        ranks = rank_labels(p.scores)
        acc = 0.0
        for l in y:
            above = sum(1 for l2 in y if ranks[l2] <= ranks[l])
            acc += above / int(ranks[l])
        total += acc / len(y)
    return total / len(preds)


def average_recall(preds: Sequence[LabelScores], truth: Sequence[frozenset]) -> float:
    _check_pairs(preds, truth)
    _check_nonempty_truth(truth)
    total = 0.0
    for p, y in zip(preds, truth):
        ranks = rank_labels(p.scores)
        cutoff = len(p.predicted)
        hit = sum(1 for l in y if ranks[l] <= cutoff)
        total += hit / len(y)
    return total / len(preds)


def average_f1(avgprec: float, avgrecl: float) -> float:
    """Harmonic mean of the two aggregates; 0 when both are 0."""
    if avgprec + avgrecl == 0:
        return 0.0
    return 2.0 * avgprec * avgrecl / (avgprec + avgrecl)


def compute_report(preds: Sequence[LabelScores], truth: Sequence[frozenset], T: int) -> MetricReport:
    """Evaluate all seven criteria at once."""
    p = average_precision(preds, truth)
    r = average_recall(preds, truth)
    return MetricReport(
        hamming_loss=hamming_loss(preds, truth, T),
        one_error=one_error(preds, truth),
        coverage=coverage(preds, truth),
        ranking_loss=ranking_loss(preds, truth, T),
        avg_precision=p,
        avg_recall=r,
        avg_f1=average_f1(p, r),
    )
