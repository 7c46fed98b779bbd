"""Consensus aggregation engines.

Implements the precision-weighted estimator, the per-view iterative
variance-weighted consensus (each view is an independent aggregation task
whose per-grader variance is estimated by message passing on the review
graph), the plain-average baseline, and the weighted combination of view
grades into an overall grade per submission.

All functions are pure: identical inputs give bit-identical outputs.
Message lists are reduced in source-id order so floating-point results are
reproducible across runs and backends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .kernels import propagate_view as _default_kernel
from .model import Dataset, ViewSpec, require_valid

__all__ = [
    "ConsensusResult",
    "DEFAULT_ITERATIONS",
    "DEFAULT_VARIANCE_FLOOR",
    "EngineConfig",
    "Estimate",
    "Message",
    "average_baseline",
    "combine_overall",
    "vancouver_views",
    "weighted_estimate",
]

DEFAULT_ITERATIONS = 20
DEFAULT_VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class Message:
    """One unit of propagated evidence: a source, a value, and its variance."""

    source: str
    value: float
    variance: float


@dataclass(frozen=True)
class Estimate:
    """A precision-weighted value and the variance it is known with."""

    value: float
    variance: float


@dataclass(frozen=True)
class EngineConfig:
    """Iteration count and the positive floor applied to variance estimates.

    The floor guards the exact-agreement case (a grader matching consensus
    perfectly yields a zero variance estimate, which would divide by zero);
    the default is the smallest perturbation that preserves weighting order.
    """

    iterations: int = DEFAULT_ITERATIONS
    variance_floor: float = DEFAULT_VARIANCE_FLOOR

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.variance_floor > 0:
            raise ValueError("variance_floor must be > 0")


@dataclass(frozen=True)
class ConsensusResult:
    """Per-(submission, view) consensus estimates, per-submission overall
    grades, and per-(grader, view) final variance estimates."""

    view_grades: dict[tuple[str, str], Estimate]
    overall: dict[str, float]
    grader_variances: dict[tuple[str, str], float]


def weighted_estimate(messages: Sequence[Message]) -> Estimate:
    """Precision-weighted combination of messages.

    value = (sum x/v) / (sum 1/v); variance = 1 / (sum 1/v). Messages are
    reduced in source order, making the result exactly permutation
    invariant.
    """
    if not messages:
        raise ValueError("no messages")
    sx = 0.0
    sw = 0.0
    for m in sorted(messages, key=lambda m: m.source):
        w = 1.0 / m.variance
        sx += m.value * w
        sw += w
    return Estimate(value=sx / sw, variance=1.0 / sw)


def combine_overall(
    view_values: Mapping[str, float], views: Sequence[ViewSpec]
) -> float:
    """Weighted sum of per-view values in declared view order."""
    total = 0.0
    for spec in views:
        if spec.view_id not in view_values:
            raise KeyError(f"missing value for view {spec.view_id!r}")
        total += view_values[spec.view_id] * spec.weight
    return total


def _topology(dataset: Dataset):
    """CSR adjacency of the review graph, edge slices sorted by opposite id."""
    submissions = sorted(dataset.graph.submissions)
    graders = sorted(dataset.graph.graders)
    sub_index = {s: i for i, s in enumerate(submissions)}
    grader_index = {g: j for j, g in enumerate(graders)}

    item_edges = sorted(dataset.graph.edges)  # by (submission, grader)
    grader_edges = sorted(dataset.graph.edges, key=lambda e: (e[1], e[0]))
    n_edges = len(item_edges)

    item_ptr = np.zeros(len(submissions) + 1, dtype=np.intp)
    grader_ptr = np.zeros(len(graders) + 1, dtype=np.intp)
    item_grader = np.empty(n_edges, dtype=np.intp)
    grader_item = np.empty(n_edges, dtype=np.intp)

    for s, g in item_edges:
        item_ptr[sub_index[s] + 1] += 1
    for s, g in grader_edges:
        grader_ptr[grader_index[g] + 1] += 1
    np.cumsum(item_ptr, out=item_ptr)
    np.cumsum(grader_ptr, out=grader_ptr)

    grader_slot = {}
    for f, (s, g) in enumerate(grader_edges):
        grader_item[f] = sub_index[s]
        grader_slot[(s, g)] = f
    item_to_grader_slot = np.empty(n_edges, dtype=np.intp)
    grader_to_item_slot = np.empty(n_edges, dtype=np.intp)
    for e, (s, g) in enumerate(item_edges):
        item_grader[e] = grader_index[g]
        f = grader_slot[(s, g)]
        item_to_grader_slot[e] = f
        grader_to_item_slot[f] = e

    return (
        submissions,
        graders,
        item_edges,
        grader_edges,
        item_ptr,
        item_grader,
        grader_ptr,
        grader_item,
        item_to_grader_slot,
        grader_to_item_slot,
    )


def vancouver_views(
    dataset: Dataset,
    config: EngineConfig | None = None,
    *,
    kernel: Callable | None = None,
) -> ConsensusResult:
    """Per-view iterative variance-weighted consensus over the review graph.

    Each view is aggregated independently: item message lists start at the
    observed grades with unit variance; each of the K iterations alternates
    leave-one-out estimates from items with residual-based variance
    estimates from graders; the final item estimates become the view
    consensus, combined across views by weight into the overall grade.

    The dataset must pass validation (degree >= 2 everywhere, complete
    grade table). ``kernel`` overrides the backend, for benchmarks and
    parity tests only.
    """
    config = config or EngineConfig()
    require_valid(dataset)
    run_kernel = kernel or _default_kernel

    (
        submissions,
        graders,
        item_edges,
        grader_edges,
        item_ptr,
        item_grader,
        grader_ptr,
        grader_item,
        item_to_grader_slot,
        grader_to_item_slot,
    ) = _topology(dataset)

    lookup = dataset.grade_lookup
    view_grades: dict[tuple[str, str], Estimate] = {}
    grader_variances: dict[tuple[str, str], float] = {}
    per_view_values: dict[str, np.ndarray] = {}

    for spec in dataset.views:
        item_grade = np.array(
            [lookup[(s, g, spec.view_id)] for s, g in item_edges], dtype=np.float64
        )
        grader_grade = np.array(
            [lookup[(s, g, spec.view_id)] for s, g in grader_edges], dtype=np.float64
        )
        value, variance, grader_variance = run_kernel(
            item_ptr,
            item_grader,
            item_grade,
            grader_ptr,
            grader_item,
            grader_grade,
            item_to_grader_slot,
            grader_to_item_slot,
            config.iterations,
            config.variance_floor,
        )
        per_view_values[spec.view_id] = value
        for i, s in enumerate(submissions):
            view_grades[(s, spec.view_id)] = Estimate(
                value=float(value[i]), variance=float(variance[i])
            )
        for j, g in enumerate(graders):
            grader_variances[(g, spec.view_id)] = float(grader_variance[j])

    overall = {
        s: combine_overall(
            {spec.view_id: float(per_view_values[spec.view_id][i]) for spec in dataset.views},
            dataset.views,
        )
        for i, s in enumerate(submissions)
    }
    return ConsensusResult(
        view_grades=view_grades, overall=overall, grader_variances=grader_variances
    )


def average_baseline(
    dataset: Dataset, variance_floor: float = DEFAULT_VARIANCE_FLOOR
) -> ConsensusResult:
    """Plain arithmetic-mean consensus per (submission, view).

    The reported variance is the sample variance of the observed grades
    divided by their count (the variance of the mean under equal weights),
    clamped to the floor. No grader variances are estimated.
    """
    require_valid(dataset)
    lookup = dataset.grade_lookup
    adjacency = {
        s: sorted(dataset.graph._submission_adjacency[s])
        for s in dataset.graph.submissions
    }

    view_grades: dict[tuple[str, str], Estimate] = {}
    for spec in dataset.views:
        for s in sorted(dataset.graph.submissions):
            values = [lookup[(s, g, spec.view_id)] for g in adjacency[s]]
            n = len(values)
            mean = sum(values) / n
            sq = 0.0
            for x in values:
                d = x - mean
                sq += d * d
            variance = sq / (n - 1) / n
            if variance < variance_floor:
                variance = variance_floor
            view_grades[(s, spec.view_id)] = Estimate(value=mean, variance=variance)

    overall = {
        s: combine_overall(
            {spec.view_id: view_grades[(s, spec.view_id)].value for spec in dataset.views},
            dataset.views,
        )
        for s in sorted(dataset.graph.submissions)
    }
    return ConsensusResult(view_grades=view_grades, overall=overall, grader_variances={})
