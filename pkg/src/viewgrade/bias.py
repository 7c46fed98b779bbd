"""Bias-pattern detection and grade de-biasing.

A grader's systematic offset on one view shows up in the differences
between their observed grades and expert truth (diff = observed − true).
When the band of two standard deviations around the mean difference lies
entirely above zero the grader has a positive pattern (consistently grades
high, with ~95% confidence); entirely below zero, a negative pattern.
Flagged graders get a constant shift correction derived from their diffs.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from enum import Enum

from .model import Dataset, GradeRecord, InvalidDatasetError, neighborhood

__all__ = [
    "BiasPattern",
    "BiasReport",
    "DEFAULT_MIN_SAMPLES",
    "DebiasStrategy",
    "PatternResult",
    "bias_report",
    "compute_diffs",
    "compute_reports",
    "correction_for",
    "debias_grades",
    "detect_pattern",
]

# below this many truth-covered diffs the band estimate is vacuous
DEFAULT_MIN_SAMPLES = 4


class BiasPattern(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NONE = "none"
    INSUFFICIENT_DATA = "insufficient_data"


class DebiasStrategy(str, Enum):
    """Statistic of the diffs subtracted from a flagged grader's grades.

    MIN_DIFF is the conservative default for positive patterns (never pushes
    a grade below its true value). Applied literally to a negative pattern
    it over-corrects upward; SYMMETRIC_CONSERVATIVE resolves per pattern
    (min for positive, max for negative) to stay conservative on both sides.
    """

    MIN_DIFF = "min_diff"
    MAX_DIFF = "max_diff"
    MEDIAN_DIFF = "median_diff"
    MEAN_DIFF = "mean_diff"
    SYMMETRIC_CONSERVATIVE = "symmetric_conservative"


@dataclass(frozen=True)
class PatternResult:
    """Mean and standard deviation of the diffs, and the detected pattern."""

    mean_diff: float
    std_diff: float
    pattern: BiasPattern


@dataclass(frozen=True)
class BiasReport:
    """Detection summary for one (grader, view) pair."""

    grader_id: str
    view_id: str
    sample_count: int
    mean_diff: float
    std_diff: float
    pattern: BiasPattern
    diffs: tuple[float, ...]


def compute_diffs(dataset: Dataset, grader_id: str, view_id: str) -> list[float]:
    """diff = observed − true for every truth-covered review of the grader.

    Ordered by submission id. Submissions without truth for this view are
    skipped.
    """
    if dataset.truth is None:
        raise InvalidDatasetError("truth required for bias analysis")
    diffs = []
    for s in sorted(neighborhood(dataset.graph, grader_id)):
        t = dataset.truth.get(s, view_id)
        if t is None:
            continue
        diffs.append(dataset.grade(s, grader_id, view_id) - t)
    return diffs


def detect_pattern(
    diffs: list[float] | tuple[float, ...],
    n_min: int = DEFAULT_MIN_SAMPLES,
    ddof: int = 0,
) -> PatternResult:
    """Classify a diff sequence by the two-standard-deviation band test.

    positive iff mean − 2*std > 0, negative iff mean + 2*std < 0, with at
    least ``n_min`` samples; fewer samples give INSUFFICIENT_DATA. ``ddof``
    selects population (0, default) or sample (1) standard deviation.
    """
    n = len(diffs)
    if n == 0:
        return PatternResult(math.nan, math.nan, BiasPattern.INSUFFICIENT_DATA)
    mu = math.fsum(diffs) / n
    if n - ddof > 0:
        var = math.fsum((d - mu) ** 2 for d in diffs) / (n - ddof)
        sigma = math.sqrt(var)
    else:
        sigma = math.nan
    if n < n_min:
        pattern = BiasPattern.INSUFFICIENT_DATA
    elif mu - 2.0 * sigma > 0.0:
        pattern = BiasPattern.POSITIVE
    elif mu + 2.0 * sigma < 0.0:
        pattern = BiasPattern.NEGATIVE
    else:
        pattern = BiasPattern.NONE
    return PatternResult(mean_diff=mu, std_diff=sigma, pattern=pattern)


def bias_report(
    dataset: Dataset,
    grader_id: str,
    view_id: str,
    n_min: int = DEFAULT_MIN_SAMPLES,
    ddof: int = 0,
) -> BiasReport:
    diffs = compute_diffs(dataset, grader_id, view_id)
    result = detect_pattern(diffs, n_min=n_min, ddof=ddof)
    return BiasReport(
        grader_id=grader_id,
        view_id=view_id,
        sample_count=len(diffs),
        mean_diff=result.mean_diff,
        std_diff=result.std_diff,
        pattern=result.pattern,
        diffs=tuple(diffs),
    )


def compute_reports(
    dataset: Dataset, n_min: int = DEFAULT_MIN_SAMPLES, ddof: int = 0
) -> list[BiasReport]:
    """One report per (grader, view), graders sorted, views in declared order."""
    return [
        bias_report(dataset, g, spec.view_id, n_min=n_min, ddof=ddof)
        for g in sorted(dataset.graph.graders)
        for spec in dataset.views
    ]


def correction_for(report: BiasReport, strategy: DebiasStrategy) -> float | None:
    """Shift applied to a flagged grader's grades; None when not flagged."""
    if report.pattern not in (BiasPattern.POSITIVE, BiasPattern.NEGATIVE):
        return None
    kind = strategy
    if strategy is DebiasStrategy.SYMMETRIC_CONSERVATIVE:
        kind = (
            DebiasStrategy.MIN_DIFF
            if report.pattern is BiasPattern.POSITIVE
            else DebiasStrategy.MAX_DIFF
        )
    diffs = report.diffs
    if kind is DebiasStrategy.MIN_DIFF:
        return min(diffs)
    if kind is DebiasStrategy.MAX_DIFF:
        return max(diffs)
    if kind is DebiasStrategy.MEDIAN_DIFF:
        return statistics.median(diffs)
    return math.fsum(diffs) / len(diffs)


def debias_grades(
    dataset: Dataset, reports: list[BiasReport], strategy: DebiasStrategy
) -> Dataset:
    """New dataset with flagged graders' grades shifted by their correction.

    Every grade of a flagged (grader, view) moves by −c, including grades on
    submissions lacking truth coverage (the correction is a property of the
    grader, not the submission). Unflagged graders and the truth table are
    untouched.

    Truth-covered grades are rebuilt as true + (diff − c) rather than
    observed − c: identical in real arithmetic, but it keeps the corrected
    diffs' extremum exactly zero under the min/max strategies instead of one
    rounding ulp off.
    """
    corrections: dict[tuple[str, str], float] = {}
    for report in reports:
        c = correction_for(report, strategy)
        if c is not None:
            corrections[(report.grader_id, report.view_id)] = c
    if not corrections:
        return dataset

    truth = dataset.truth
    new_grades: list[GradeRecord] = []
    for rec in dataset.grades:
        c = corrections.get((rec.grader_id, rec.view_id))
        if c is None:
            new_grades.append(rec)
            continue
        t = truth.get(rec.submission_id, rec.view_id) if truth is not None else None
        if t is None:
            value = rec.grade - c
        else:
            value = t + ((rec.grade - t) - c)
        new_grades.append(
            GradeRecord(
                grader_id=rec.grader_id,
                submission_id=rec.submission_id,
                view_id=rec.view_id,
                grade=value,
            )
        )
    return dataset.with_grades(new_grades)
