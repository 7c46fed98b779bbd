"""Domain model for multi-view crowd grading.

Views, the bipartite review graph, observed grade records, and expert truth
tables, plus structural validation. All types are immutable values after
construction and safe to share across threads.

Structural problems in a dataset are data, not failures: they are reported
by :func:`validate_dataset` as a list of :class:`Violation`. Constructors
only reject values that can never be meaningful (reversed scales, negative
weights, non-finite grades).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

__all__ = [
    "Dataset",
    "GradeRecord",
    "InvalidDatasetError",
    "ReviewGraph",
    "TruthTable",
    "ViewSpec",
    "Violation",
    "neighborhood",
    "require_valid",
    "validate_dataset",
]


class InvalidDatasetError(ValueError):
    """A dataset failed a structural precondition."""


@dataclass(frozen=True)
class ViewSpec:
    """One expert-defined grading perspective with its scale and weight."""

    view_id: str
    label: str
    scale_min: float
    scale_max: float
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.scale_min < self.scale_max:
            raise ValueError(
                f"view {self.view_id!r}: scale_min must be strictly below scale_max"
            )
        if not self.weight >= 0:
            raise ValueError(f"view {self.view_id!r}: weight must be nonnegative")


@dataclass(frozen=True)
class GradeRecord:
    """A single observed grade: one grader, one submission, one view."""

    grader_id: str
    submission_id: str
    view_id: str
    grade: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.grade):
            raise ValueError(
                f"grade for ({self.submission_id!r}, {self.grader_id!r}, "
                f"{self.view_id!r}) must be finite"
            )


@dataclass(frozen=True)
class ReviewGraph:
    """Bipartite review relation between submissions and graders.

    Edges are (submission_id, grader_id) pairs. Degree and endpoint
    consistency are checked by :func:`validate_dataset`, not here.
    """

    submissions: frozenset[str]
    graders: frozenset[str]
    edges: frozenset[tuple[str, str]]

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]]) -> "ReviewGraph":
        """Build a graph whose node sets are exactly the edge endpoints."""
        edge_set = frozenset((str(s), str(g)) for s, g in edges)
        return cls(
            submissions=frozenset(s for s, _ in edge_set),
            graders=frozenset(g for _, g in edge_set),
            edges=edge_set,
        )

    @cached_property
    def _submission_adjacency(self) -> dict[str, frozenset[str]]:
        adj: dict[str, set[str]] = {s: set() for s in self.submissions}
        for s, g in self.edges:
            adj.setdefault(s, set()).add(g)
        return {s: frozenset(gs) for s, gs in adj.items()}

    @cached_property
    def _grader_adjacency(self) -> dict[str, frozenset[str]]:
        adj: dict[str, set[str]] = {g: set() for g in self.graders}
        for s, g in self.edges:
            adj.setdefault(g, set()).add(s)
        return {g: frozenset(ss) for g, ss in adj.items()}


def neighborhood(graph: ReviewGraph, node: str) -> frozenset[str]:
    """Nodes adjacent to ``node`` across the bipartition.

    For a submission id, the graders who reviewed it; for a grader id, the
    submissions they reviewed. Raises ``KeyError`` for an unknown node and
    ``ValueError`` for an id used on both sides (ambiguous).
    """
    is_submission = node in graph.submissions
    is_grader = node in graph.graders
    if is_submission and is_grader:
        raise ValueError(f"ambiguous node id used on both sides: {node!r}")
    if is_submission:
        return graph._submission_adjacency[node]
    if is_grader:
        return graph._grader_adjacency[node]
    raise KeyError(f"node not in graph: {node!r}")


@dataclass(frozen=True)
class TruthTable:
    """Expert true grades keyed by (submission_id, view_id); may be partial."""

    entries: Mapping[tuple[str, str], float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", dict(self.entries))

    def get(self, submission_id: str, view_id: str) -> float | None:
        return self.entries.get((submission_id, view_id))

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Dataset:
    """Views, review graph, observed grades, and optional expert truth."""

    views: tuple[ViewSpec, ...]
    graph: ReviewGraph
    grades: tuple[GradeRecord, ...]
    truth: TruthTable | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "views", tuple(self.views))
        object.__setattr__(self, "grades", tuple(self.grades))

    @cached_property
    def view_ids(self) -> tuple[str, ...]:
        return tuple(v.view_id for v in self.views)

    @cached_property
    def grade_lookup(self) -> dict[tuple[str, str, str], float]:
        """(submission_id, grader_id, view_id) -> grade. Duplicates (a
        validation violation) resolve to the last record."""
        return {
            (r.submission_id, r.grader_id, r.view_id): r.grade for r in self.grades
        }

    def grade(self, submission_id: str, grader_id: str, view_id: str) -> float:
        return self.grade_lookup[(submission_id, grader_id, view_id)]

    def with_grades(self, grades: Iterable[GradeRecord]) -> "Dataset":
        """Copy of this dataset with the grade table replaced."""
        return Dataset(
            views=self.views, graph=self.graph, grades=tuple(grades), truth=self.truth
        )


@dataclass(frozen=True)
class Violation:
    """One structural problem found in a dataset.

    severity "error" breaks engine preconditions; "warning" is advisory
    (e.g. an out-of-scale grade, which the engine still processes).
    """

    code: str
    severity: str
    subject: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.severity}] {self.code} at {self.subject}: {self.detail}"


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Check every structural invariant; return all violations found.

    Returns an empty list for a valid dataset. Side-effect free and
    idempotent; ordering of the report is deterministic.
    """
    report: list[Violation] = []
    err = lambda code, subject, detail: report.append(
        Violation(code, "error", subject, detail)
    )
    warn = lambda code, subject, detail: report.append(
        Violation(code, "warning", subject, detail)
    )

    graph = dataset.graph
    seen_views: set[str] = set()
    for spec in dataset.views:
        if spec.view_id in seen_views:
            err("duplicate_view", spec.view_id, "view id declared more than once")
        seen_views.add(spec.view_id)
    view_ids = set(seen_views)

    for s, g in sorted(graph.edges):
        if s not in graph.submissions:
            err("edge_endpoint", s, f"edge ({s!r}, {g!r}) names an undeclared submission")
        if g not in graph.graders:
            err("edge_endpoint", g, f"edge ({s!r}, {g!r}) names an undeclared grader")

    degree_s: dict[str, int] = {s: 0 for s in graph.submissions}
    degree_g: dict[str, int] = {g: 0 for g in graph.graders}
    for s, g in graph.edges:
        if s in degree_s:
            degree_s[s] += 1
        if g in degree_g:
            degree_g[g] += 1
    for s in sorted(degree_s):
        if degree_s[s] < 2:
            err("degree", s, f"degree < 2 at submission {s!r}")
    for g in sorted(degree_g):
        if degree_g[g] < 2:
            err("degree", g, f"degree < 2 at grader {g!r}")

    scale_by_view = {v.view_id: (v.scale_min, v.scale_max) for v in dataset.views}
    seen_records: set[tuple[str, str, str]] = set()
    for rec in dataset.grades:
        key = (rec.submission_id, rec.grader_id, rec.view_id)
        subject = f"({rec.submission_id}, {rec.grader_id}, {rec.view_id})"
        if key in seen_records:
            err("duplicate_grade", subject, "more than one grade record for this key")
        seen_records.add(key)
        if rec.view_id not in view_ids:
            err("unknown_view", subject, f"grade references undeclared view {rec.view_id!r}")
        if (rec.submission_id, rec.grader_id) not in graph.edges:
            err("grade_not_on_edge", subject, "grade record has no matching review edge")
        bounds = scale_by_view.get(rec.view_id)
        if bounds is not None and not bounds[0] <= rec.grade <= bounds[1]:
            warn(
                "out_of_scale",
                subject,
                f"grade {rec.grade!r} outside scale [{bounds[0]!r}, {bounds[1]!r}]",
            )

    for s, g in sorted(graph.edges):
        for view_id in dataset.view_ids:
            if (s, g, view_id) not in seen_records:
                err(
                    "missing_grade",
                    f"({s}, {g}, {view_id})",
                    "missing grade record for an assigned review",
                )

    if dataset.truth is not None:
        for (s, view_id) in sorted(dataset.truth.entries):
            if s not in graph.submissions:
                err("unknown_truth_key", s, f"truth keyed by unknown submission {s!r}")
            if view_id not in view_ids:
                err("unknown_truth_key", view_id, f"truth keyed by unknown view {view_id!r}")

    return report


def require_valid(dataset: Dataset) -> None:
    """Raise :class:`InvalidDatasetError` on the first error-severity violation."""
    for violation in validate_dataset(dataset):
        if violation.severity == "error":
            raise InvalidDatasetError(f"precondition violated: {violation}")
