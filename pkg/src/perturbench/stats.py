"""Statistical core: population spread, coefficient of variation, correlation,
and the four-quadrant placement rule.

All sums use ``math.fsum`` so long accuracy vectors do not lose precision to
accumulation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import DomainError


class QuadrantLabel(Enum):
    GROUP_I = "GROUP_I"      # accuracy at or above reference, spread at or below
    GROUP_II = "GROUP_II"    # accuracy at or above reference, spread above
    GROUP_III = "GROUP_III"  # accuracy below reference, spread at or below
    GROUP_IV = "GROUP_IV"    # accuracy below reference, spread above


@dataclass(frozen=True)
class ReferencePoint:
    """Mean accuracy and CV of the clean-trained run that anchors the quadrants."""

    rMA: float
    rCV: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rMA) and math.isfinite(self.rCV)):
            raise DomainError("reference point must be finite")


def mean(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise DomainError("mean of empty sequence")
    return math.fsum(values) / len(values)


def std_pop(values: Sequence[float]) -> float:
    """Population standard deviation (divide by n, not n-1)."""
    mu = mean(values)
    return math.sqrt(math.fsum((x - mu) ** 2 for x in values) / len(values))


def cv_percent(values: Sequence[float]) -> float:
    """Population standard deviation as a percentage of the mean."""
    mu = mean(values)
    if mu == 0:
        raise DomainError("coefficient of variation undefined for zero mean")
    return 100.0 * std_pop(values) / mu


def mean_accuracy(values: Sequence[float]) -> float:
    """Plain arithmetic mean of per-group accuracies."""
    return mean(values)


def cv_of_classifier(values: Sequence[float]) -> float:
    """CV of a classifier's per-group accuracy vector (same rule as cv_percent)."""
    return cv_percent(values)


def rank_average_ties(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the average of their positions."""
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Linear correlation coefficient of paired samples."""
    if len(x) != len(y):
        raise DomainError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise DomainError("need at least 2 pairs")
    mx, my = mean(x), mean(y)
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0 or syy == 0:
        raise DomainError("correlation undefined for constant input")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    return sxy / math.sqrt(sxx * syy)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation with average-rank tie handling.

    Computed as the linear correlation of the rank vectors, which reduces to
    the classic 1 - 6*sum(d^2)/(n(n^2-1)) form when no ties exist.
    """
    if len(x) != len(y):
        raise DomainError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise DomainError("need at least 2 pairs")
    return pearson(rank_average_ties(x), rank_average_ties(y))


def identify_group(ma: float, cv: float, ref: ReferencePoint) -> QuadrantLabel:
    """Place a (mean accuracy, CV) point into its quadrant.

    Branch order and comparison strictness are part of the contract: both
    boundary lines belong to the at-or-above-accuracy / at-or-below-spread
    side, so a point equal to the reference lands in GROUP_I.
    """
    if not (math.isfinite(ma) and math.isfinite(cv)):
        raise DomainError("inputs must be finite")
    if ma >= ref.rMA and cv <= ref.rCV:
        return QuadrantLabel.GROUP_I
    if ma >= ref.rMA and cv > ref.rCV:
        return QuadrantLabel.GROUP_II
    if ma < ref.rMA and cv <= ref.rCV:
        return QuadrantLabel.GROUP_III
    return QuadrantLabel.GROUP_IV
