"""Group fairness and predictive metrics.

Conventions: predictions, targets and group labels are 0/1 vectors of equal
length. Disparity metrics take absolute differences between the two groups;
the odds disparity is the SUM of the false-positive-rate and true-positive-
rate gaps, not their max. All values are returned in natural units; the x100
presentation scaling happens only in report rendering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyConditionCell, EmptyGroup

DISPARITY_METRICS = ("dp", "eop", "eod")


@dataclass(frozen=True)
class GroupConfusion:
    """Counts indexed by (sensitive, target, prediction)."""

    counts: np.ndarray  # shape (2, 2, 2), non-negative ints

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def group_confusion(pred, y, s) -> GroupConfusion:
    pred, y, s = (np.asarray(v, dtype=np.int64) for v in (pred, y, s))
    counts = np.zeros((2, 2, 2), dtype=np.int64)
    np.add.at(counts, (s, y, pred), 1)
    return GroupConfusion(counts)


def _check_lengths(*vecs):
    arrays = [np.asarray(v) for v in vecs]
    n = arrays[0].shape[0]
    if any(a.shape[0] != n for a in arrays) or n == 0:
        raise ValueError("inputs must be non-empty vectors of equal length")
    return arrays


def demographic_parity_diff(pred, s) -> float:
    """|P(pred=1 | s=0) - P(pred=1 | s=1)|."""
    pred, s = _check_lengths(pred, s)
    rates = []
    for g in (0, 1):
        mask = s == g
        if not mask.any():
            raise EmptyGroup(g)
        rates.append(pred[mask].mean())
    return abs(rates[0] - rates[1])


def rate_diff(pred, y, s, j: int) -> float:
    """|P(pred=1 | s=0, y=j) - P(pred=1 | s=1, y=j)| (the per-outcome rate gap)."""
    pred, y, s = _check_lengths(pred, y, s)
    rates = []
    for g in (0, 1):
        mask = (s == g) & (y == j)
        if not mask.any():
            raise EmptyConditionCell(g, j)
        rates.append(pred[mask].mean())
    return abs(rates[0] - rates[1])


def equal_opportunity_diff(pred, y, s) -> float:
    """True-positive-rate gap between groups."""
    return rate_diff(pred, y, s, 1)


def equalized_odds_diff(pred, y, s) -> float:
    """Sum of the false-positive-rate and true-positive-rate gaps."""
    return rate_diff(pred, y, s, 0) + rate_diff(pred, y, s, 1)


def accuracy(pred, y) -> float:
    pred, y = _check_lengths(pred, y)
    return float((np.asarray(pred) == np.asarray(y)).mean())


def f1(pred, y) -> float:
    """F1 on the positive class: 2TP / (2TP + FP + FN); 0 when the denominator is 0."""
    pred, y = _check_lengths(pred, y)
    pred = np.asarray(pred, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    f1: float
    dp: float | None
    eop: float | None
    eod: float | None
    undefined_flags: frozenset[str] = field(default_factory=frozenset)


def compute_report(pred, y, s) -> MetricReport:
    """All five metrics at once; disparities with an empty conditioning cell
    come back as None and are named in ``undefined_flags``."""
    undefined = set()
    values = {}
    for name, fn in (
        ("dp", lambda: demographic_parity_diff(pred, s)),
        ("eop", lambda: equal_opportunity_diff(pred, y, s)),
        ("eod", lambda: equalized_odds_diff(pred, y, s)),
    ):
        try:
            values[name] = fn()
        except (EmptyGroup, EmptyConditionCell):
            values[name] = None
            undefined.add(name)
    return MetricReport(
        accuracy=accuracy(pred, y),
        f1=f1(pred, y),
        dp=values["dp"],
        eop=values["eop"],
        eod=values["eod"],
        undefined_flags=frozenset(undefined),
    )
