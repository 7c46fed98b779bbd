"""Agreement metrics between true and consensus grades.

Correlation, residual spread, and root-mean-square error, all with
population (divide-by-n) moments, plus the pooling rules for repeated
simulation runs: per-view results are averaged across runs, overall
results are computed once on the pooled pairs of all runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "MetricsReport",
    "OVERALL_SCOPE",
    "error_sigma",
    "pearson",
    "pooled_metrics",
    "rmse",
]

OVERALL_SCOPE = "overall"


def _check_lengths(truth: Sequence[float], est: Sequence[float], minimum: int) -> None:
    if len(truth) != len(est):
        raise ValueError(
            f"length mismatch: {len(truth)} true values vs {len(est)} estimates"
        )
    if len(truth) < minimum:
        raise ValueError(f"need at least {minimum} pairs, got {len(truth)}")


def pearson(truth: Sequence[float], est: Sequence[float]) -> float:
    """Correlation coefficient with population moments, clamped to [−1, 1].

    Raises for mismatched lengths, fewer than two pairs, or a constant
    input (undefined correlation).
    """
    _check_lengths(truth, est, 2)
    n = len(truth)
    mx = math.fsum(truth) / n
    my = math.fsum(est) / n
    cov = math.fsum((x - mx) * (y - my) for x, y in zip(truth, est)) / n
    vx = math.fsum((x - mx) ** 2 for x in truth) / n
    vy = math.fsum((y - my) ** 2 for y in est) / n
    if vx == 0.0 or vy == 0.0:
        raise ValueError("undefined correlation for constant input")
    r = cov / math.sqrt(vx) / math.sqrt(vy)
    return max(-1.0, min(1.0, r))


def rmse(truth: Sequence[float], est: Sequence[float]) -> float:
    """Root of the mean squared residual (estimate − true)."""
    _check_lengths(truth, est, 1)
    n = len(truth)
    return math.sqrt(math.fsum((y - x) ** 2 for x, y in zip(truth, est)) / n)


def error_sigma(truth: Sequence[float], est: Sequence[float]) -> float:
    """Population standard deviation of the residuals (estimate − true).

    Insensitive to a pure offset between the sequences; rmse² equals
    error_sigma² plus the squared mean residual.
    """
    _check_lengths(truth, est, 2)
    n = len(truth)
    residuals = [y - x for x, y in zip(truth, est)]
    mu = math.fsum(residuals) / n
    return math.sqrt(math.fsum((r - mu) ** 2 for r in residuals) / n)


@dataclass(frozen=True)
class MetricsReport:
    """The three metrics for one model at one scope (a view id or overall)."""

    model: str
    scope: str
    rho: float
    sigma: float
    rmse: float
    n: int


def pooled_metrics(
    runs: Sequence[tuple[Sequence[float], Sequence[float]]],
    scope: str,
    model: str,
    mode: str | None = None,
) -> MetricsReport:
    """Combine per-run (truth, estimate) pairs into one report.

    mode "average" computes each metric per run and averages across runs;
    mode "pool" concatenates all pairs and computes each metric once. The
    default is "pool" for the overall scope and "average" for view scopes.
    ``n`` counts all pairs consumed.
    """
    if not runs:
        raise ValueError("empty run set")
    if mode is None:
        mode = "pool" if scope == OVERALL_SCOPE else "average"
    if mode not in ("average", "pool"):
        raise ValueError(f"unknown pooling mode {mode!r}")

    if mode == "pool":
        truth = [x for t, _ in runs for x in t]
        est = [y for _, e in runs for y in e]
        return MetricsReport(
            model=model,
            scope=scope,
            rho=pearson(truth, est),
            sigma=error_sigma(truth, est),
            rmse=rmse(truth, est),
            n=len(truth),
        )

    k = len(runs)
    rho = math.fsum(pearson(t, e) for t, e in runs) / k
    sigma = math.fsum(error_sigma(t, e) for t, e in runs) / k
    root = math.fsum(rmse(t, e) for t, e in runs) / k
    return MetricsReport(
        model=model,
        scope=scope,
        rho=rho,
        sigma=sigma,
        rmse=root,
        n=sum(len(t) for t, _ in runs),
    )
