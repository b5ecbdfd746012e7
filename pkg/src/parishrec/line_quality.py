"""Unsupervised line-detection quality: fraction of line heights near the median.

A page whose detected line heights scatter far from their median most likely
has a detection problem; the ratio of heights inside the window
[alpha * median, (1 + alpha) * median] is the quality score, and pages are
bucketed by bad-line ratio into five classes for triage.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import TextLine

DEFAULT_ALPHA = 0.5

# bad_ratio buckets: <=1%, (1%,5%], (5%,25%], (25%,50%], >50%
CLASS_LABELS = ("≤1%", "1−5%", "5−25%", "25−50%", ">50%")
_CLASS_BOUNDS = (0.01, 0.05, 0.25, 0.50)


@dataclass(frozen=True)
class QualityReport:
    q_line: float
    bad_ratio: float
    quality_class: str
    alpha: float
    median_height: float


def line_height(line: TextLine) -> float:
    """Height of the line polygon's axis-aligned bounding box."""
    if len(line.polygon.points) < 3:
        raise ValueError(f"line {line.id!r} has a degenerate polygon")
    return line.polygon.height()


def bad_ratio_class(bad_ratio: float) -> str:
    for bound, label in zip(_CLASS_BOUNDS, CLASS_LABELS):
        if bad_ratio <= bound:
            return label
    return CLASS_LABELS[-1]


def median(values: Sequence[float]) -> float:
    """Median with even-cardinality ties resolved as the mean of the middle pair."""
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        raise ValueError("empty value list")
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def q_line(heights: Sequence[float], alpha: float = DEFAULT_ALPHA) -> QualityReport:
    """Quality ratio over a page's line heights.

    The window is the closed interval [alpha*median, (1+alpha)*median]: a
    height exactly on either bound counts as good. alpha=0 degenerates to
    "exactly the median" and alpha=1 to [median, 2*median]; both are computed
    as written.
    """
    if not heights:
        raise ValueError("empty height list")
    if any(h <= 0 for h in heights):
        raise ValueError("nonpositive line height")
    if not (0.0 <= alpha <= 1.0):
        raise ValueError("alpha outside [0,1]")
    med = median(heights)
    lo, hi = alpha * med, (1.0 + alpha) * med
    good = sum(1 for h in heights if lo <= h <= hi)
    q = good / len(heights)
    bad = 1.0 - q
    return QualityReport(q, bad, bad_ratio_class(bad), alpha, med)


def page_quality(lines: Sequence[TextLine], alpha: float = DEFAULT_ALPHA) -> QualityReport:
    return q_line([line_height(ln) for ln in lines], alpha)
