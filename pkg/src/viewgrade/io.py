"""Canonical file formats.

Structured documents (datasets, consensus results, generator profiles,
configs) are JSON; tables (bias reports, metrics, per-run values, sweeps)
are comma-separated text with a header row, preceded by ``#`` comment
lines that embed the provenance needed to reconstruct the artifact.

Dataset documents carry exactly the top-level keys ``views``, ``edges``,
``grades`` and (optionally) ``truth``; numbers round-trip at full double
precision. All writers emit deterministically ordered output so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .bias import BiasReport, DebiasStrategy, correction_for
from .engine import ConsensusResult, Estimate
from .metrics import MetricsReport
from .model import Dataset, GradeRecord, ReviewGraph, TruthTable, ViewSpec
from .synth import GroundTruthProfile

__all__ = [
    "consensus_from_dict",
    "consensus_to_dict",
    "dataset_from_dict",
    "dataset_to_dict",
    "load_consensus",
    "load_dataset",
    "read_table",
    "render_table",
    "save_consensus",
    "save_dataset",
    "save_profile",
    "write_table",
]


class FormatError(ValueError):
    """A document does not match its canonical schema."""


def _require(mapping: Mapping[str, Any], key: str, context: str) -> Any:
    if key not in mapping:
        raise FormatError(f"{context}: missing field {key!r}")
    return mapping[key]


# ---------------------------------------------------------------------------
# dataset documents


def dataset_to_dict(dataset: Dataset) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "views": [
            {
                "id": v.view_id,
                "label": v.label,
                "scale_min": v.scale_min,
                "scale_max": v.scale_max,
                "weight": v.weight,
            }
            for v in dataset.views
        ],
        "edges": [
            {"submission": s, "grader": g} for s, g in sorted(dataset.graph.edges)
        ],
        "grades": [
            {
                "submission": r.submission_id,
                "grader": r.grader_id,
                "view": r.view_id,
                "value": r.grade,
            }
            for r in sorted(
                dataset.grades, key=lambda r: (r.submission_id, r.grader_id, r.view_id)
            )
        ],
    }
    if dataset.truth is not None:
        doc["truth"] = [
            {"submission": s, "view": v, "value": value}
            for (s, v), value in sorted(dataset.truth.entries.items())
        ]
    return doc


def dataset_from_dict(doc: Mapping[str, Any]) -> Dataset:
    views = tuple(
        ViewSpec(
            view_id=str(_require(v, "id", "views")),
            label=str(_require(v, "label", "views")),
            scale_min=float(_require(v, "scale_min", "views")),
            scale_max=float(_require(v, "scale_max", "views")),
            weight=float(_require(v, "weight", "views")),
        )
        for v in _require(doc, "views", "dataset")
    )
    graph = ReviewGraph.from_edges(
        (
            str(_require(e, "submission", "edges")),
            str(_require(e, "grader", "edges")),
        )
        for e in _require(doc, "edges", "dataset")
    )
    grades = tuple(
        GradeRecord(
            grader_id=str(_require(g, "grader", "grades")),
            submission_id=str(_require(g, "submission", "grades")),
            view_id=str(_require(g, "view", "grades")),
            grade=float(_require(g, "value", "grades")),
        )
        for g in _require(doc, "grades", "dataset")
    )
    truth = None
    if "truth" in doc and doc["truth"] is not None:
        truth = TruthTable(
            {
                (
                    str(_require(t, "submission", "truth")),
                    str(_require(t, "view", "truth")),
                ): float(_require(t, "value", "truth"))
                for t in doc["truth"]
            }
        )
    return Dataset(views=views, graph=graph, grades=grades, truth=truth)


def _dump_json(doc: Mapping[str, Any], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _load_json(path: Path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def save_dataset(dataset: Dataset, path: Path) -> None:
    _dump_json(dataset_to_dict(dataset), path)


def load_dataset(path: Path) -> Dataset:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise FormatError("dataset document must be a JSON object")
    return dataset_from_dict(doc)


# ---------------------------------------------------------------------------
# consensus documents


def consensus_to_dict(result: ConsensusResult) -> dict[str, Any]:
    return {
        "view_grades": [
            {"submission": s, "view": v, "value": est.value, "variance": est.variance}
            for (s, v), est in sorted(result.view_grades.items())
        ],
        "overall": [
            {"submission": s, "value": value}
            for s, value in sorted(result.overall.items())
        ],
        "grader_variances": [
            {"grader": g, "view": v, "variance": value}
            for (g, v), value in sorted(result.grader_variances.items())
        ],
    }


def consensus_from_dict(doc: Mapping[str, Any]) -> ConsensusResult:
    view_grades = {
        (
            str(_require(e, "submission", "view_grades")),
            str(_require(e, "view", "view_grades")),
        ): Estimate(
            value=float(_require(e, "value", "view_grades")),
            variance=float(_require(e, "variance", "view_grades")),
        )
        for e in _require(doc, "view_grades", "consensus")
    }
    overall = {
        str(_require(e, "submission", "overall")): float(_require(e, "value", "overall"))
        for e in _require(doc, "overall", "consensus")
    }
    grader_variances = {
        (
            str(_require(e, "grader", "grader_variances")),
            str(_require(e, "view", "grader_variances")),
        ): float(_require(e, "variance", "grader_variances"))
        for e in _require(doc, "grader_variances", "consensus")
    }
    return ConsensusResult(
        view_grades=view_grades, overall=overall, grader_variances=grader_variances
    )


def save_consensus(result: ConsensusResult, path: Path) -> None:
    _dump_json(consensus_to_dict(result), path)


def load_consensus(path: Path) -> ConsensusResult:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise FormatError("consensus document must be a JSON object")
    return consensus_from_dict(doc)


# ---------------------------------------------------------------------------
# generator profile sidecar


def save_profile(
    profile: GroundTruthProfile, path: Path, meta: Mapping[str, Any] | None = None
) -> None:
    doc: dict[str, Any] = {
        "profile": [
            {
                "grader": g,
                "view": v,
                "true_variance": profile.true_variances[(g, v)],
                "injected_offset": profile.injected_offsets.get((g, v), 0.0),
            }
            for (g, v) in sorted(profile.true_variances)
        ]
    }
    if meta:
        doc["meta"] = dict(meta)
    _dump_json(doc, path)


# ---------------------------------------------------------------------------
# tables


def render_table(
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
    meta: Mapping[str, Any] | None = None,
) -> str:
    """CSV text with '#' provenance comments before the header row."""
    buf = _io.StringIO()
    if meta:
        for key, value in meta.items():
            if isinstance(value, (dict, list, tuple)):
                value = json.dumps(value, sort_keys=True, separators=(",", ":"))
            buf.write(f"# {key}: {value}\n")
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_table(
    path: Path,
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
    meta: Mapping[str, Any] | None = None,
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_table(fieldnames, rows, meta), encoding="utf-8")


def read_table(path: Path) -> list[dict[str, str]]:
    """Rows of a table file, skipping '#' comment lines."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def bias_table_rows(
    reports: Iterable[BiasReport], strategy: DebiasStrategy
) -> list[dict[str, Any]]:
    rows = []
    for report in reports:
        c = correction_for(report, strategy)
        rows.append(
            {
                "grader": report.grader_id,
                "view": report.view_id,
                "n": report.sample_count,
                "mean_diff": report.mean_diff,
                "std_diff": report.std_diff,
                "pattern": report.pattern.value,
                "correction_applied": "" if c is None else c,
            }
        )
    return rows


BIAS_TABLE_FIELDS = (
    "grader",
    "view",
    "n",
    "mean_diff",
    "std_diff",
    "pattern",
    "correction_applied",
)

METRICS_TABLE_FIELDS = ("model", "scope", "k", "rho", "sigma", "rmse", "n_runs")


def metrics_table_rows(
    reports: Iterable[MetricsReport], k: float, n_runs: int
) -> list[dict[str, Any]]:
    return [
        {
            "model": r.model,
            "scope": r.scope,
            "k": k,
            "rho": r.rho,
            "sigma": r.sigma,
            "rmse": r.rmse,
            "n_runs": n_runs,
        }
        for r in reports
    ]
